// What the user does at login: slide rows and columns until the four
// secret images sit in order on one line.

use tetrad::grid::{
    aligned_window, is_aligned, replay, shuffle_grid, solve_alignment, synthetic_images, Secret,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ids = synthetic_images();
    let secret = Secret::new([
        ids[12].clone(),
        ids[3].clone(),
        ids[40].clone(),
        ids[27].clone(),
    ])?;
    let grid = shuffle_grid(&ids, 2024)?;
    println!("secret {:?}", secret.images());
    println!("aligned before: {}", is_aligned(&grid, &secret)?);

    let moves = solve_alignment(&grid, &secret)?;
    for m in &moves {
        println!("  {:?} {} by {:+}", m.axis, m.index, m.delta);
    }
    let end = replay(&grid, &moves)?;
    println!("{end}");
    println!(
        "{} moves, aligned in {:?}",
        moves.len(),
        aligned_window(&end, &secret)?
    );

    // order matters
    assert!(is_aligned(&end, &secret)?);
    assert!(!is_aligned(&end, &secret.reversed())?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
