// Start the HTTP service on a free local port and log in over the wire with
// the blocking client.

use tetrad::auth::Consequence;
use tetrad::client::{Backend, HttpClient};
use tetrad::grid::{solve_alignment, synthetic_images, Grid, Secret};
use tetrad::service::{BackgroundServer, RegistrationRequest, ServiceConfig, SessionRequest};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let server = BackgroundServer::start(ServiceConfig::new(dir.path()))?;
    println!("listening on {}", server.url());
    let client = HttpClient::new(server.url());

    let ids = synthetic_images();
    let secret_ids = vec![
        ids[44].clone(),
        ids[0].clone(),
        ids[22].clone(),
        ids[9].clone(),
    ];
    let account = client.create_account(None)?;
    client.register(
        &account,
        RegistrationRequest {
            image_ids: ids,
            secret: secret_ids.clone(),
        },
    )?;

    let session = client.start_session(
        &account,
        SessionRequest {
            consequence: Consequence::Payment,
            seed: None,
        },
    )?;
    let grid = Grid::from_cells(session.grid)?;
    let moves = solve_alignment(&grid, &Secret::try_from(secret_ids)?)?;
    for m in &moves {
        client.record_move(&session.session_id, *m)?;
    }
    let verdict = client.submit(&session.session_id)?;
    println!("{} moves -> {:?}", moves.len(), verdict.status);

    let bought = client.resource("film-002", &session.session_id)?;
    println!("{}: {}", bought.title, bought.content);
    // an access-only title needs an access session
    match client.resource("film-001", &session.session_id) {
        Ok(_) => println!("unexpected grant"),
        Err(e) => println!("film-001: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
