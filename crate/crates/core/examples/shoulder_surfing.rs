// An observer who sees the whole screen and every move. One session leaves
// 72 candidates; intersecting two sessions usually pins the secret down.

use tetrad::cli::attack_table;
use tetrad::observer::{
    bits, keyboard_baseline, run_attack_trials, simulate_attacker, synthetic_registration,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let reg = synthetic_registration("victim", 3)?;
    let report = simulate_attacker(&reg, 3, 3)?;
    println!(
        "candidates per session {:?}",
        report.per_session_candidate_counts
    );
    println!("after intersecting      {:?}", report.intersection_sizes);
    println!(
        "sessions to unique      {}",
        serde_json::to_string(&report.sessions_to_unique)?
    );
    println!(
        "keyboard leaks {} candidate ({} bits)",
        keyboard_baseline().intersection_sizes[0],
        bits(1)
    );

    let summary = run_attack_trials(200, 2, 42)?;
    print!("{}", attack_table(&summary));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
