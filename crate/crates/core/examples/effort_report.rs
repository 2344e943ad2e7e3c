// Action counts for registering and logging in, next to a typed password.

use tetrad::observer::{effort_report, RegistrationFlow, DEFAULT_PASSWORD_BASELINE_ACTIONS};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for flow in [RegistrationFlow::Jill, RegistrationFlow::Jack] {
        println!("{flow:?}");
        for step in flow.steps() {
            println!("  {:<24} {}", step.label, step.actions);
        }
        let r = effort_report(flow, 50, 1, DEFAULT_PASSWORD_BASELINE_ACTIONS)?;
        println!(
            "  registration {}  login mean {:.2}  password {}",
            r.registration_actions, r.auth_actions_mean, r.password_baseline_actions
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
