// Register an account and log in against an in-process service, then watch
// three wrong-order attempts lock it.

use tetrad::auth::{Consequence, Verdict};
use tetrad::grid::{solve_alignment, synthetic_images, Grid, Secret};
use tetrad::service::{RegistrationRequest, Service, ServiceConfig, SessionRequest};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let svc = Service::open(ServiceConfig::new(dir.path()))?;
    let ids = synthetic_images();
    let secret_ids = vec![
        ids[5].clone(),
        ids[19].clone(),
        ids[33].clone(),
        ids[1].clone(),
    ];
    let secret = Secret::try_from(secret_ids.clone())?;

    let account = svc.create_account(Some("alice".into()))?;
    svc.register(
        &account,
        RegistrationRequest {
            image_ids: ids,
            secret: secret_ids,
        },
    )?;

    let session = svc.start_session(
        &account,
        SessionRequest {
            consequence: Consequence::Access,
            seed: Some(1),
        },
    )?;
    let grid = Grid::from_cells(session.grid)?;
    for m in solve_alignment(&grid, &secret)? {
        svc.record_move(&session.session_id, m)?;
    }
    let result = svc.submit(&session.session_id)?;
    println!("login: {:?}", result.status);
    let film = svc.resource("film-001", Some(&session.session_id))?;
    println!("granted {} ({})", film.resource_id, film.title);

    for attempt in 1..=3 {
        let s = svc.start_session(
            &account,
            SessionRequest {
                consequence: Consequence::Access,
                seed: Some(10 + attempt),
            },
        )?;
        let grid = Grid::from_cells(s.grid)?;
        for m in solve_alignment(&grid, &secret.reversed())? {
            svc.record_move(&s.session_id, m)?;
        }
        let r = svc.submit(&s.session_id)?;
        assert_eq!(r.status, Verdict::Rejected);
        println!(
            "wrong order #{attempt}: failures {} locked {}",
            r.failures, r.locked
        );
    }
    let err = svc
        .start_session(
            &account,
            SessionRequest {
                consequence: Consequence::Access,
                seed: None,
            },
        )
        .unwrap_err();
    println!("next session: {err}");

    // admin reset, as `tetrad unlock` does
    svc.store().unlock(&account)?;
    let again = svc.start_session(
        &account,
        SessionRequest {
            consequence: Consequence::Access,
            seed: Some(99),
        },
    )?;
    println!("after unlock: new session {}", again.session_id);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
