//! Renders the generation prompt for the A+B fixture, replays the recorded
//! model answer, parses it into a bundle and lints it.
//!
//!     cargo run --example prompt_and_bundle

use std::path::Path;

use judgeforge::llm::{LlmClient, Mode, TranscriptCache};
use judgeforge::prompt::{lint_bundle, parse_bundle, render_prompt, ConstraintSidecar, PromptContext, PromptTemplate, PromptVersion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let statement = std::fs::read_to_string(fixtures.join("aplusb/statement.md"))?;

    let template = PromptTemplate::builtin(PromptVersion::V2);
    let prompt = render_prompt(&template, &PromptContext::new(statement).with_exemplars())?;
    println!("prompt: {} bytes, slots {:?}", prompt.len(), template.slots());

    // Replay never touches the network: a missing transcript is an error.
    let client = LlmClient::offline(TranscriptCache::new(fixtures.join("llm-cache")));
    let exchange = client.complete("o3-mini-high", &prompt, Mode::Replay)?;
    println!("replayed {} ({} + {} tokens)", exchange.key(), exchange.input_tokens, exchange.output_tokens);

    let bundle = parse_bundle(&exchange.response, 25)?;
    println!("generator: {} lines", bundle.generator_source.lines().count());
    println!("validator: {} lines", bundle.validator_source.lines().count());
    for (i, row) in bundle.param_rows.iter().enumerate().take(10) {
        println!("  test{:02}.in <- gen {row}", i + 1);
    }

    let sidecar = ConstraintSidecar::from_file(&fixtures.join("aplusb/bounds.json"))?;
    let findings = lint_bundle(&bundle, Some(&sidecar));
    println!("lint findings: {}", findings.len());
    for f in findings {
        println!("  {:?} at {:?}: {}", f.category, f.line, f.message);
    }
    Ok(())
}
