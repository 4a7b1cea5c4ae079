use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use super::{ChatExchange, LlmError};

/// USD per one million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPrice {
    pub input: Decimal,
    pub output: Decimal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceTable {
    pub models: BTreeMap<String, ModelPrice>,
}

impl PriceTable {
    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        let table: PriceTable = serde_json::from_str(&text).map_err(|e| LlmError::Malformed(format!("{}: {e}", path.display())))?;
        if let Some((id, _)) = table.models.iter().find(|(_, p)| p.input.is_sign_negative() || p.output.is_sign_negative()) {
            return Err(LlmError::Malformed(format!("negative price for `{id}`")));
        }
        Ok(table)
    }

    pub fn price(&self, model_id: &str) -> Result<ModelPrice, LlmError> {
        self.models.get(model_id).copied().ok_or_else(|| LlmError::UnknownModel(model_id.to_string()))
    }
}

fn tokens_cost(model_id: &str, input_tokens: u64, output_tokens: u64, prices: &PriceTable) -> Result<Decimal, LlmError> {
    let p = prices.price(model_id)?;
    let million = Decimal::from(1_000_000u64);
    let raw = Decimal::from(input_tokens) * p.input / million + Decimal::from(output_tokens) * p.output / million;
    let mut cost = raw.round_dp_with_strategy(6, RoundingStrategy::MidpointNearestEven);
    cost.rescale(6);
    Ok(cost)
}

/// Token counts times per-million prices, rounded half-even to 6 places.
pub fn cost_of(exchange: &ChatExchange, prices: &PriceTable) -> Result<Decimal, LlmError> {
    tokens_cost(&exchange.model_id, exchange.input_tokens, exchange.output_tokens, prices)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    /// Cache key of the exchange.
    pub exchange: String,
    pub model_id: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub estimated: bool,
    pub cost_usd: Decimal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: Vec<LedgerEntry>,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, exchange: &ChatExchange, prices: &PriceTable) -> Result<&LedgerEntry, LlmError> {
        let entry = LedgerEntry {
            exchange: exchange.key(),
            model_id: exchange.model_id.clone(),
            input_tokens: exchange.input_tokens,
            output_tokens: exchange.output_tokens,
            estimated: exchange.tokens_estimated,
            cost_usd: cost_of(exchange, prices)?,
        };
        self.entries.push(entry);
        Ok(self.entries.last().unwrap())
    }

    pub fn total(&self) -> Decimal {
        self.entries.iter().map(|e| e.cost_usd).sum()
    }

    /// Re-prices every entry from `prices`, e.g. after loading a ledger
    /// written against a different table.
    pub fn repriced(&self, prices: &PriceTable) -> Result<CostLedger, LlmError> {
        let entries = self
            .entries
            .iter()
            .map(|e| Ok(LedgerEntry { cost_usd: tokens_cost(&e.model_id, e.input_tokens, e.output_tokens, prices)?, ..e.clone() }))
            .collect::<Result<_, LlmError>>()?;
        Ok(CostLedger { entries })
    }

    /// Appends one JSON line per entry in a single write.
    pub fn append_to(path: &Path, entry: &LedgerEntry) -> std::io::Result<()> {
        let mut line = serde_json::to_string(entry).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        f.write_all(line.as_bytes())
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(e),
        };
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
            .collect::<Result<_, _>>()?;
        Ok(CostLedger { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::str::FromStr;

    fn table(model: &str, input: &str, output: &str) -> PriceTable {
        let mut t = PriceTable::default();
        t.models.insert(model.into(), ModelPrice { input: Decimal::from_str(input).unwrap(), output: Decimal::from_str(output).unwrap() });
        t
    }

    fn ex(model: &str, i: u64, o: u64) -> ChatExchange {
        ChatExchange {
            model_id: model.into(),
            prompt: format!("{i}/{o}"),
            response: String::new(),
            input_tokens: i,
            output_tokens: o,
            tokens_estimated: false,
            timestamp: chrono::Utc::now(),
        }
    }

    #[test]
    fn spot_values() {
        let t = table("m", "2.00", "8.00");
        assert_eq!(cost_of(&ex("m", 0, 0), &t).unwrap().to_string(), "0.000000");
        assert_eq!(cost_of(&ex("m", 1500, 3000), &t).unwrap().to_string(), "0.027000");
        let unit = table("m", "1.00", "0");
        assert_eq!(cost_of(&ex("m", 1_000_000, 0), &unit).unwrap().to_string(), "1.000000");
        assert_eq!(cost_of(&ex("x", 1, 1), &t), Err(LlmError::UnknownModel("x".into())));
    }

    #[test]
    fn rounding_is_half_even() {
        // 1 token at $0.5/1M = 0.0000005 -> 0.000000; 3 tokens = 0.0000015 -> 0.000002
        let t = table("m", "0.5", "0");
        assert_eq!(cost_of(&ex("m", 1, 0), &t).unwrap().to_string(), "0.000000");
        assert_eq!(cost_of(&ex("m", 3, 0), &t).unwrap().to_string(), "0.000002");
        assert_eq!(cost_of(&ex("m", 5, 0), &t).unwrap().to_string(), "0.000002");
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let t = table("m", "1.1", "4.4");
        let mut ledger = CostLedger::new();
        for (i, o) in [(10, 20), (3000, 1)] {
            let e = ledger.record(&ex("m", i, o), &t).unwrap().clone();
            CostLedger::append_to(&path, &e).unwrap();
        }
        assert_eq!(CostLedger::load(&path).unwrap(), ledger);
        assert_eq!(CostLedger::load(&dir.path().join("none")).unwrap(), CostLedger::new());
    }

    proptest! {
        #[test]
        fn cost_is_monotone(i in 0u64..10_000_000, o in 0u64..10_000_000, di in 0u64..1000, dout in 0u64..1000) {
            let t = table("m", "1.10", "4.40");
            let base = cost_of(&ex("m", i, o), &t).unwrap();
            prop_assert!(cost_of(&ex("m", i + di, o), &t).unwrap() >= base);
            prop_assert!(cost_of(&ex("m", i, o + dout), &t).unwrap() >= base);
        }

        #[test]
        fn total_is_permutation_invariant(tokens in proptest::collection::vec((0u64..5_000_000, 0u64..5_000_000), 0..30), seed in any::<u64>()) {
            let t = table("m", "3", "15");
            let mut ledger = CostLedger::new();
            for (i, o) in &tokens {
                ledger.record(&ex("m", *i, *o), &t).unwrap();
            }
            let mut shuffled = ledger.clone();
            let n = shuffled.entries.len();
            let mut s = seed;
            for k in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.entries.swap(k, (s >> 33) as usize % (k + 1));
            }
            prop_assert_eq!(ledger.total(), shuffled.total());
        }
    }
}
