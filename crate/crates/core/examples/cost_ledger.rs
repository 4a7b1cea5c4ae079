//! Prices the fixture ledger with each committed price table.
//!
//!     cargo run --example cost_ledger

use std::path::Path;

use judgeforge::llm::{CostLedger, PriceTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let ledger = CostLedger::load(&fixtures.join("ledger.jsonl"))?;
    println!("{} exchanges", ledger.entries.len());
    for table in ["default", "flat", "tiered", "odd"] {
        let prices = PriceTable::from_file(&fixtures.join(format!("prices/{table}.json")))?;
        match ledger.repriced(&prices) {
            Ok(priced) => {
                println!("{table:>8}: ${}", priced.total());
                for e in &priced.entries {
                    println!("{:>10} {:<14} {:>7} in {:>7} out  ${}", e.exchange, e.model_id, e.input_tokens, e.output_tokens, e.cost_usd);
                }
            }
            Err(e) => println!("{table:>8}: {e}"),
        }
    }
    Ok(())
}
