// Shifting rows and columns of the 5x9 grid, and reading its windows.

use tetrad::grid::{
    apply_move, candidates, enumerate_windows, shuffle_grid, synthetic_images, Move, WindowKind,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = shuffle_grid(&synthetic_images(), 7)?;
    println!("initial\n{grid}");

    // rows wrap around: 9 steps right is the identity
    let moved = apply_move(&grid, Move::row(2, 1))?;
    println!("row 2 shifted right\n{moved}");
    assert_eq!(apply_move(&grid, Move::row(2, 9))?, grid);

    let down = apply_move(&moved, Move::col(0, -1))?;
    println!("then column 0 shifted up\n{down}");
    assert_eq!(apply_move(&down, Move::col(0, 1))?, moved);

    for kind in WindowKind::ALL {
        let n = enumerate_windows()
            .iter()
            .filter(|w| w.kind == kind)
            .count();
        println!("{kind:?}: {n} windows");
    }
    let first = enumerate_windows()[0];
    println!(
        "first window {first:?} reads {:?}",
        grid.read_window(&first)
    );
    println!("{} candidate tuples on screen", candidates(&grid).len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
