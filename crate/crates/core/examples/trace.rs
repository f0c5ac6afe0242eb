//! Prints the trace of a fixture: `cargo run --example trace -- fixtures/loop.isc 24`.

use iscore_core::dsl::parse_text;
use iscore_core::edition::compile;
use iscore_core::engine::{run, to_jsonl, AUTO};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let src = std::fs::read_to_string(&args[1]).expect("readable score");
    let max: u64 = args.get(2).map_or(20, |a| a.parse().expect("tick count"));
    let (s, _) = compile(&parse_text(&src).expect("valid score")).expect("feasible score");
    let out = run(&s, &[], max, 0, AUTO).expect("run");
    print!("{}", to_jsonl(&out.trace));
    eprintln!("{:?} at {}", out.reason, out.last_tick);
}
