//! The 5x9 image grid: cyclic row/column shifts, alignment windows, and a
//! constructive solver that plays the part of a user who knows the secret.
//!
//! Everything here is a pure function of immutable values. A [`Grid`] is a
//! row-major arrangement of the 45 account images; the only way to change it
//! is a [`Move`], which rotates one whole row or column with wrap-around.
//! A [`Secret`] is accepted when its four images sit in order inside one of
//! the 72 non-wrapping [`Window`]s.

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ROWS: usize = 5;
pub const COLS: usize = 9;
pub const CELLS: usize = ROWS * COLS;
pub const WINDOW_LEN: usize = 4;

/// Upper bound on the length of any transcript returned by the solver.
pub const SOLVER_MOVE_BUDGET: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("expected {expected} images, got {actual}")]
    Cardinality { expected: usize, actual: usize },
    #[error("image {0} appears more than once")]
    Duplicate(ImageId),
    #[error("image id must be non-empty")]
    EmptyImageId,
    #[error("{axis} index {index} out of range")]
    MoveIndex { axis: Axis, index: usize },
    #[error("move delta must be non-zero")]
    ZeroDelta,
    #[error("secret image {0} is not on the grid")]
    MissingImage(ImageId),
    #[error("secret must hold {WINDOW_LEN} distinct images")]
    InvalidSecret,
}

/// Opaque token naming one image of an account's set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ImageId(String);

impl ImageId {
    pub fn new(token: impl Into<String>) -> Result<Self, GridError> {
        let token = token.into();
        if token.is_empty() {
            return Err(GridError::EmptyImageId);
        }
        Ok(Self(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ImageId {
    type Error = GridError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ImageId> for String {
    fn from(id: ImageId) -> Self {
        id.0
    }
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `img-00` .. `img-44`; handy for simulations that do not need real faces.
pub fn synthetic_images() -> Vec<ImageId> {
    (0..CELLS).map(|i| ImageId(format!("img-{i:02}"))).collect()
}

/// Checks that `images` is a set of exactly 45 distinct ids.
pub fn validate_image_set(images: &[ImageId]) -> Result<(), GridError> {
    if images.len() != CELLS {
        return Err(GridError::Cardinality {
            expected: CELLS,
            actual: images.len(),
        });
    }
    let mut seen = HashSet::with_capacity(CELLS);
    for id in images {
        if !seen.insert(id) {
            return Err(GridError::Duplicate(id.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Col,
}

impl Axis {
    /// Number of rows (or columns) along this axis.
    pub fn count(self) -> usize {
        match self {
            Axis::Row => ROWS,
            Axis::Col => COLS,
        }
    }

    /// Length of one line along this axis (a row holds 9 cells, a column 5).
    pub fn line_len(self) -> usize {
        match self {
            Axis::Row => COLS,
            Axis::Col => ROWS,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Row => "row",
            Axis::Col => "col",
        })
    }
}

/// A cyclic shift of one row or column. Positive `delta` shifts a row right
/// and a column down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub axis: Axis,
    pub index: usize,
    pub delta: i32,
}

impl Move {
    pub fn row(index: usize, delta: i32) -> Self {
        Self {
            axis: Axis::Row,
            index,
            delta,
        }
    }

    pub fn col(index: usize, delta: i32) -> Self {
        Self {
            axis: Axis::Col,
            index,
            delta,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.index >= self.axis.count() {
            return Err(GridError::MoveIndex {
                axis: self.axis,
                index: self.index,
            });
        }
        if self.delta == 0 {
            return Err(GridError::ZeroDelta);
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        Self {
            delta: -self.delta,
            ..*self
        }
    }

    pub fn is_primitive(&self) -> bool {
        self.delta.abs() == 1
    }

    /// Splits the move into `|delta|` single-step moves.
    pub fn primitives(&self) -> impl Iterator<Item = Move> + '_ {
        let step = Move {
            delta: self.delta.signum(),
            ..*self
        };
        std::iter::repeat_n(step, self.delta.unsigned_abs() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ImageId>", into = "Vec<ImageId>")]
pub struct Grid {
    cells: Vec<ImageId>,
}

impl Grid {
    /// Builds a grid from 45 distinct ids laid out row-major.
    pub fn from_cells(cells: Vec<ImageId>) -> Result<Self, GridError> {
        validate_image_set(&cells)?;
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[ImageId] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> &ImageId {
        &self.cells[row * COLS + col]
    }

    pub fn position(&self, id: &ImageId) -> Option<(usize, usize)> {
        self.cells
            .iter()
            .position(|c| c == id)
            .map(|i| (i / COLS, i % COLS))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[ImageId]> {
        self.cells.chunks(COLS)
    }

    /// The four ids covered by `window`, in its canonical order.
    pub fn read_window(&self, window: &Window) -> [ImageId; WINDOW_LEN] {
        window.coords().map(|(r, c)| self.get(r, c).clone())
    }
}

impl TryFrom<Vec<ImageId>> for Grid {
    type Error = GridError;

    fn try_from(cells: Vec<ImageId>) -> Result<Self, Self::Error> {
        Self::from_cells(cells)
    }
}

impl From<Grid> for Vec<ImageId> {
    fn from(grid: Grid) -> Self {
        grid.cells
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.cells.iter().map(|c| c.0.len()).max().unwrap_or(0);
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|c| format!("{:>width$}", c.0)).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WindowKind {
    /// left to right
    H,
    /// top to bottom
    V,
    /// top-left to bottom-right
    DR,
    /// top-right to bottom-left
    DL,
}

impl WindowKind {
    pub const ALL: [WindowKind; 4] = [WindowKind::H, WindowKind::V, WindowKind::DR, WindowKind::DL];

    fn step(self) -> (isize, isize) {
        match self {
            WindowKind::H => (0, 1),
            WindowKind::V => (1, 0),
            WindowKind::DR => (1, 1),
            WindowKind::DL => (1, -1),
        }
    }
}

/// Four consecutive cells on a line that does not wrap around the grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Window {
    pub kind: WindowKind,
    pub start: (usize, usize),
}

impl Window {
    /// `None` when any of the four cells would fall outside the grid.
    pub fn new(kind: WindowKind, start: (usize, usize)) -> Option<Self> {
        let window = Self { kind, start };
        window.try_coords().map(|_| window)
    }

    fn try_coords(&self) -> Option<[(usize, usize); WINDOW_LEN]> {
        let (dr, dc) = self.kind.step();
        let mut out = [(0, 0); WINDOW_LEN];
        for (k, slot) in out.iter_mut().enumerate() {
            let r = self.start.0 as isize + dr * k as isize;
            let c = self.start.1 as isize + dc * k as isize;
            if r < 0 || c < 0 || r >= ROWS as isize || c >= COLS as isize {
                return None;
            }
            *slot = (r as usize, c as usize);
        }
        Some(out)
    }

    pub fn coords(&self) -> [(usize, usize); WINDOW_LEN] {
        self.try_coords()
            .expect("window constructed outside the grid")
    }
}

/// Every alignment window of the 5x9 grid, each exactly once, grouped by kind
/// then ordered by start cell.
pub fn enumerate_windows() -> &'static [Window] {
    static WINDOWS: OnceLock<Vec<Window>> = OnceLock::new();
    WINDOWS.get_or_init(|| {
        let mut out = Vec::new();
        for kind in WindowKind::ALL {
            for r in 0..ROWS {
                for c in 0..COLS {
                    if let Some(w) = Window::new(kind, (r, c)) {
                        out.push(w);
                    }
                }
            }
        }
        out
    })
}

/// Ordered sequence of four distinct images.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ImageId>", into = "Vec<ImageId>")]
pub struct Secret([ImageId; WINDOW_LEN]);

impl Secret {
    pub fn new(images: [ImageId; WINDOW_LEN]) -> Result<Self, GridError> {
        let distinct: HashSet<_> = images.iter().collect();
        if distinct.len() != WINDOW_LEN {
            return Err(GridError::InvalidSecret);
        }
        Ok(Self(images))
    }

    pub fn images(&self) -> &[ImageId; WINDOW_LEN] {
        &self.0
    }

    pub fn reversed(&self) -> Self {
        let mut images = self.0.clone();
        images.reverse();
        Self(images)
    }
}

impl TryFrom<Vec<ImageId>> for Secret {
    type Error = GridError;

    fn try_from(images: Vec<ImageId>) -> Result<Self, Self::Error> {
        let arr: [ImageId; WINDOW_LEN] = images.try_into().map_err(|_| GridError::InvalidSecret)?;
        Self::new(arr)
    }
}

impl From<Secret> for Vec<ImageId> {
    fn from(secret: Secret) -> Self {
        secret.0.into()
    }
}

/// Deterministic PRNG used for every seeded draw in the crate: ChaCha8 keyed
/// from the 64-bit seed via `SeedableRng::seed_from_u64`.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fisher-Yates shuffle of the image set into a fresh grid. The input order
/// does not matter: ids are sorted before shuffling, so the result depends
/// only on the set and the seed.
pub fn shuffle_grid(images: &[ImageId], seed: u64) -> Result<Grid, GridError> {
    validate_image_set(images)?;
    let mut cells = images.to_vec();
    cells.sort();
    cells.shuffle(&mut rng_from_seed(seed));
    Ok(Grid { cells })
}

pub fn apply_move(grid: &Grid, m: Move) -> Result<Grid, GridError> {
    m.validate()?;
    let mut cells = grid.cells.clone();
    let len = m.axis.line_len();
    let shift = m.delta.rem_euclid(len as i32) as usize;
    if shift == 0 {
        return Ok(Grid { cells });
    }
    let index_of = |k: usize| match m.axis {
        Axis::Row => m.index * COLS + k,
        Axis::Col => k * COLS + m.index,
    };
    let line: Vec<ImageId> = (0..len).map(|k| grid.cells[index_of(k)].clone()).collect();
    for (k, id) in line.into_iter().enumerate() {
        cells[index_of((k + shift) % len)] = id;
    }
    Ok(Grid { cells })
}

/// Folds `apply_move` over a transcript.
pub fn replay<'a>(
    initial: &Grid,
    moves: impl IntoIterator<Item = &'a Move>,
) -> Result<Grid, GridError> {
    moves
        .into_iter()
        .try_fold(initial.clone(), |g, m| apply_move(&g, *m))
}

fn check_present(grid: &Grid, secret: &Secret) -> Result<[(usize, usize); WINDOW_LEN], GridError> {
    let mut out = [(0, 0); WINDOW_LEN];
    for (slot, id) in out.iter_mut().zip(secret.images()) {
        *slot = grid
            .position(id)
            .ok_or_else(|| GridError::MissingImage(id.clone()))?;
    }
    Ok(out)
}

/// True iff the secret occupies some window in canonical order.
pub fn is_aligned(grid: &Grid, secret: &Secret) -> Result<bool, GridError> {
    Ok(aligned_window(grid, secret)?.is_some())
}

/// The window holding the secret, if any. At most one window can match since
/// the four positions determine the window.
pub fn aligned_window(grid: &Grid, secret: &Secret) -> Result<Option<Window>, GridError> {
    let pos = check_present(grid, secret)?;
    let (r0, c0) = pos[0];
    let (r1, c1) = pos[1];
    let dr = r1 as isize - r0 as isize;
    let dc = c1 as isize - c0 as isize;
    let kind = match (dr, dc) {
        (0, 1) => WindowKind::H,
        (1, 0) => WindowKind::V,
        (1, 1) => WindowKind::DR,
        (1, -1) => WindowKind::DL,
        _ => return Ok(None),
    };
    Ok(Window::new(kind, (r0, c0)).filter(|w| w.coords() == pos))
}

/// The ordered tuples an onlooker cannot tell apart from the secret: one per
/// window, read in canonical order.
pub fn candidates(grid: &Grid) -> Vec<[ImageId; WINDOW_LEN]> {
    enumerate_windows()
        .iter()
        .map(|w| grid.read_window(w))
        .collect()
}

fn shortest_shift(from: usize, to: usize, len: usize) -> i32 {
    let fwd = (to + len - from) % len;
    if fwd <= len / 2 {
        fwd as i32
    } else {
        fwd as i32 - len as i32
    }
}

/// Moves that bring `secret` into the horizontal window starting at
/// `(row, start_col)`, expanded into primitive steps.
///
/// Tiles are placed left to right. A tile already in the target row is first
/// pushed down one cell by a column shift; it is then row-shifted into the
/// target column and column-shifted up into the target row. Only the target
/// row holds placed tiles, and only columns at or right of the current target
/// are ever column-shifted, so earlier placements are never disturbed.
pub fn solve_to_window(
    grid: &Grid,
    secret: &Secret,
    row: usize,
    start_col: usize,
) -> Result<Vec<Move>, GridError> {
    check_present(grid, secret)?;
    if row >= ROWS || start_col + WINDOW_LEN > COLS {
        return Err(GridError::MoveIndex {
            axis: Axis::Row,
            index: row.max(start_col),
        });
    }
    let mut g = grid.clone();
    let mut moves = Vec::new();
    let mut push = |g: &mut Grid, m: Move| -> Result<(), GridError> {
        if m.delta != 0 {
            *g = apply_move(g, m)?;
            moves.extend(m.primitives());
        }
        Ok(())
    };
    for (k, id) in secret.images().iter().enumerate() {
        let target_col = start_col + k;
        let (mut r, mut c) = g.position(id).expect("checked above");
        if (r, c) == (row, target_col) {
            continue;
        }
        if r == row {
            push(&mut g, Move::col(c, 1))?;
            r = (r + 1) % ROWS;
        }
        push(&mut g, Move::row(r, shortest_shift(c, target_col, COLS)))?;
        c = target_col;
        push(&mut g, Move::col(c, shortest_shift(r, row, ROWS)))?;
        debug_assert_eq!(g.position(id), Some((row, target_col)));
    }
    debug_assert!(is_aligned(&g, secret)?);
    Ok(moves)
}

/// Shortest transcript found by [`solve_to_window`] over all horizontal
/// windows; empty when the grid is already aligned.
pub fn solve_alignment(grid: &Grid, secret: &Secret) -> Result<Vec<Move>, GridError> {
    if is_aligned(grid, secret)? {
        return Ok(Vec::new());
    }
    let mut best: Option<Vec<Move>> = None;
    for w in enumerate_windows()
        .iter()
        .filter(|w| w.kind == WindowKind::H)
    {
        let moves = solve_to_window(grid, secret, w.start.0, w.start.1)?;
        if best.as_ref().is_none_or(|b| moves.len() < b.len()) {
            best = Some(moves);
        }
    }
    Ok(best.expect("grid has horizontal windows"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids() -> Vec<ImageId> {
        synthetic_images()
    }

    fn secret(names: [&str; 4]) -> Secret {
        Secret::new(names.map(|n| ImageId::new(n).unwrap())).unwrap()
    }

    /// Grid whose row-major order is exactly `synthetic_images()`.
    fn identity_grid() -> Grid {
        Grid::from_cells(ids()).unwrap()
    }

    #[test]
    fn image_id_rejects_empty() {
        assert_eq!(ImageId::new(""), Err(GridError::EmptyImageId));
        assert!(serde_json::from_str::<ImageId>("\"\"").is_err());
    }

    #[test]
    fn shuffle_rejects_bad_sets() {
        let mut short = ids();
        short.pop();
        assert!(matches!(
            shuffle_grid(&short, 1),
            Err(GridError::Cardinality { actual: 44, .. })
        ));
        let mut dup = ids();
        dup[3] = dup[4].clone();
        assert!(matches!(
            shuffle_grid(&dup, 1),
            Err(GridError::Duplicate(_))
        ));
    }

    #[test]
    fn shuffle_is_deterministic_and_order_insensitive() {
        let a = shuffle_grid(&ids(), 99).unwrap();
        let mut rev = ids();
        rev.reverse();
        assert_eq!(a, shuffle_grid(&ids(), 99).unwrap());
        assert_eq!(a, shuffle_grid(&rev, 99).unwrap());
        let mut cells = a.cells().to_vec();
        cells.sort();
        assert_eq!(cells, ids());
    }

    #[test]
    fn hundred_seeds_give_distinct_grids() {
        let distinct: HashSet<Grid> = (0..100).map(|s| shuffle_grid(&ids(), s).unwrap()).collect();
        assert!(distinct.len() >= 99, "{}", distinct.len());
    }

    #[test]
    fn row_shift_wraps() {
        let g = identity_grid();
        let moved = apply_move(&g, Move::row(0, 1)).unwrap();
        assert_eq!(moved.get(0, 1), g.get(0, 0));
        assert_eq!(moved.get(0, 0), g.get(0, 8));
        for r in 1..ROWS {
            for c in 0..COLS {
                assert_eq!(moved.get(r, c), g.get(r, c));
            }
        }
    }

    #[test]
    fn column_shift_down_wraps() {
        let g = identity_grid();
        let moved = apply_move(&g, Move::col(3, 1)).unwrap();
        assert_eq!(moved.get(1, 3), g.get(0, 3));
        assert_eq!(moved.get(0, 3), g.get(4, 3));
        assert_eq!(moved.get(0, 2), g.get(0, 2));
    }

    #[test]
    fn full_cycle_and_inverse() {
        let g = shuffle_grid(&ids(), 5).unwrap();
        for r in 0..ROWS {
            assert_eq!(apply_move(&g, Move::row(r, 9)).unwrap(), g);
        }
        let there = apply_move(&g, Move::col(3, 2)).unwrap();
        assert_ne!(there, g);
        assert_eq!(apply_move(&there, Move::col(3, -2)).unwrap(), g);
    }

    #[test]
    fn invalid_moves_rejected() {
        let g = identity_grid();
        assert!(matches!(
            apply_move(&g, Move::row(5, 1)),
            Err(GridError::MoveIndex {
                axis: Axis::Row,
                index: 5
            })
        ));
        assert!(matches!(
            apply_move(&g, Move::col(9, 1)),
            Err(GridError::MoveIndex {
                axis: Axis::Col,
                index: 9
            })
        ));
        assert_eq!(apply_move(&g, Move::col(0, 0)), Err(GridError::ZeroDelta));
    }

    #[test]
    fn window_breakdown() {
        let windows = enumerate_windows();
        assert_eq!(windows.len(), 72);
        let count = |k| windows.iter().filter(|w| w.kind == k).count();
        assert_eq!(
            (
                count(WindowKind::H),
                count(WindowKind::V),
                count(WindowKind::DR),
                count(WindowKind::DL)
            ),
            (30, 18, 12, 12)
        );
        let h = Window::new(WindowKind::H, (0, 0)).unwrap();
        assert_eq!(h.coords(), [(0, 0), (0, 1), (0, 2), (0, 3)]);
        for c in 0..COLS {
            let starts: Vec<_> = windows
                .iter()
                .filter(|w| w.kind == WindowKind::V && w.start.1 == c)
                .map(|w| w.start.0)
                .collect();
            assert_eq!(starts, vec![0, 1]);
        }
        let dl = Window::new(WindowKind::DL, (0, 3)).unwrap();
        assert_eq!(dl.coords(), [(0, 3), (1, 2), (2, 1), (3, 0)]);
        assert!(Window::new(WindowKind::DL, (0, 2)).is_none());
        assert!(Window::new(WindowKind::H, (0, 6)).is_none());
    }

    #[test]
    fn alignment_is_order_sensitive() {
        let g = identity_grid();
        // row 2 holds img-18..img-26, so H(2,1) covers img-19..img-22
        let s = secret(["img-19", "img-20", "img-21", "img-22"]);
        assert!(is_aligned(&g, &s).unwrap());
        assert_eq!(
            aligned_window(&g, &s).unwrap(),
            Window::new(WindowKind::H, (2, 1))
        );
        assert!(!is_aligned(&g, &s.reversed()).unwrap());
        // DL from (0,3): img-03, img-11, img-19, img-27
        let dl = secret(["img-03", "img-11", "img-19", "img-27"]);
        assert!(is_aligned(&g, &dl).unwrap());
        // consecutive in row-major order but wrapping across rows
        let wrap = secret(["img-07", "img-08", "img-09", "img-10"]);
        assert!(!is_aligned(&g, &wrap).unwrap());
    }

    #[test]
    fn missing_secret_image() {
        let g = identity_grid();
        let s = secret(["img-01", "img-02", "img-03", "stranger"]);
        assert!(matches!(
            is_aligned(&g, &s),
            Err(GridError::MissingImage(_))
        ));
        assert!(matches!(
            solve_alignment(&g, &s),
            Err(GridError::MissingImage(_))
        ));
    }

    #[test]
    fn secret_validation() {
        assert!(Secret::try_from(vec![ImageId::new("a").unwrap(); 4]).is_err());
        assert!(Secret::try_from(ids()[..3].to_vec()).is_err());
        assert!(Secret::try_from(ids()[..4].to_vec()).is_ok());
    }

    #[test]
    fn candidates_are_72_distinct() {
        let g = shuffle_grid(&ids(), 3).unwrap();
        let c = candidates(&g);
        assert_eq!(c.len(), 72);
        assert_eq!(c.iter().collect::<HashSet<_>>().len(), 72);
    }

    #[test]
    fn solver_returns_empty_when_aligned() {
        let g = identity_grid();
        let s = secret(["img-19", "img-20", "img-21", "img-22"]);
        assert!(solve_alignment(&g, &s).unwrap().is_empty());
    }

    #[test]
    fn solver_one_shift_away() {
        let g = identity_grid();
        let s = secret(["img-19", "img-20", "img-21", "img-22"]);
        let shifted = apply_move(&g, Move::row(2, 3)).unwrap();
        let moves = solve_alignment(&shifted, &s).unwrap();
        assert!(moves.len() <= 1, "{moves:?}");
        assert!(moves.iter().all(Move::is_primitive));
        assert!(is_aligned(&replay(&shifted, &moves).unwrap(), &s).unwrap());
    }

    #[test]
    fn solver_every_target_window() {
        let g = shuffle_grid(&ids(), 11).unwrap();
        let s = Secret::try_from(ids()[10..14].to_vec()).unwrap();
        for w in enumerate_windows()
            .iter()
            .filter(|w| w.kind == WindowKind::H)
        {
            let moves = solve_to_window(&g, &s, w.start.0, w.start.1).unwrap();
            let done = replay(&g, &moves).unwrap();
            assert_eq!(aligned_window(&done, &s).unwrap(), Some(*w));
            assert!(moves.len() <= SOLVER_MOVE_BUDGET);
        }
        assert!(solve_to_window(&g, &s, 0, 6).is_err());
    }

    #[test]
    fn grid_serde_validates() {
        let g = shuffle_grid(&ids(), 1).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<Grid>(&json).unwrap(), g);
        assert!(serde_json::from_str::<Grid>("[\"a\",\"b\"]").is_err());
        let m: Move = serde_json::from_str(r#"{"axis":"col","index":7,"delta":-1}"#).unwrap();
        assert_eq!(m, Move::col(7, -1));
    }
}
