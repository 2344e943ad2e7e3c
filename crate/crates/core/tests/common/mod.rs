//! Fixtures and brute-force oracles shared by the integration tests. Nothing
//! here goes through the crate's window table or PPM codec.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use tetrad::grid::{Grid, ImageId, COLS, ROWS};

/// Every run of 4 consecutive in-bounds cells along any of the 8 compass
/// directions, deduplicated as unordered cell sets. Returns the distinct
/// lines together with a direction label (`H`, `V`, `DR`, `DL`).
pub fn brute_force_lines() -> Vec<(&'static str, BTreeSet<(usize, usize)>)> {
    let dirs: [(isize, isize); 8] = [
        (0, 1),
        (0, -1),
        (1, 0),
        (-1, 0),
        (1, 1),
        (-1, -1),
        (1, -1),
        (-1, 1),
    ];
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in 0..ROWS as isize {
        for c in 0..COLS as isize {
            for (dr, dc) in dirs {
                let cells: Option<Vec<(usize, usize)>> = (0..4)
                    .map(|k| {
                        let (rr, cc) = (r + dr * k, c + dc * k);
                        (rr >= 0 && cc >= 0 && rr < ROWS as isize && cc < COLS as isize)
                            .then_some((rr as usize, cc as usize))
                    })
                    .collect();
                let Some(cells) = cells else { continue };
                let set: BTreeSet<_> = cells.into_iter().collect();
                if seen.insert(set.clone()) {
                    let label = if dr == 0 {
                        "H"
                    } else if dc == 0 {
                        "V"
                    } else if dr * dc > 0 {
                        "DR"
                    } else {
                        "DL"
                    };
                    out.push((label, set));
                }
            }
        }
    }
    out
}

/// Reads the tuple at `(r, c)` stepping `(dr, dc)`, if it stays on the grid.
fn read_line(grid: &Grid, r: usize, c: usize, dr: isize, dc: isize) -> Option<[ImageId; 4]> {
    let mut out: Vec<ImageId> = Vec::with_capacity(4);
    for k in 0..4isize {
        let rr = r as isize + dr * k;
        let cc = c as isize + dc * k;
        if rr < 0 || cc < 0 || rr >= ROWS as isize || cc >= COLS as isize {
            return None;
        }
        out.push(grid.cells()[rr as usize * COLS + cc as usize].clone());
    }
    out.try_into().ok()
}

/// All ordered tuples read in canonical direction (left to right, top to
/// bottom, or increasing row on diagonals), via nested loops over every
/// start cell.
pub fn brute_force_candidates(grid: &Grid) -> BTreeSet<[ImageId; 4]> {
    let mut out = BTreeSet::new();
    for r in 0..ROWS {
        for c in 0..COLS {
            for (dr, dc) in [(0, 1), (1, 0), (1, 1), (1, -1)] {
                if let Some(t) = read_line(grid, r, c, dr, dc) {
                    out.insert(t);
                }
            }
        }
    }
    out
}

pub fn brute_force_aligned(grid: &Grid, secret: &[ImageId; 4]) -> bool {
    brute_force_candidates(grid).contains(secret)
}

/// Minimal P6 reader: header tokens are assumed comment-free, which holds
/// for files written by the fixtures and the crate.
pub fn raw_ppm(path: &Path) -> (usize, usize, Vec<u8>) {
    let bytes = fs::read(path).unwrap();
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < 4 {
        while bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        tokens.push(String::from_utf8(bytes[start..i].to_vec()).unwrap());
    }
    assert_eq!(tokens[0], "P6");
    let w: usize = tokens[1].parse().unwrap();
    let h: usize = tokens[2].parse().unwrap();
    (w, h, bytes[i + 1..].to_vec())
}

/// Per-pixel copy of the box out of the source raster.
pub fn crop_oracle(src: &Path, x: usize, y: usize, w: usize, h: usize) -> Vec<u8> {
    let (sw, _, raster) = raw_ppm(src);
    let mut out = Vec::with_capacity(w * h * 3);
    for yy in y..y + h {
        for xx in x..x + w {
            for ch in 0..3 {
                out.push(raster[(yy * sw + xx) * 3 + ch]);
            }
        }
    }
    out
}

fn write_raw_ppm(path: &Path, w: usize, h: usize, seed: usize) {
    let mut bytes = format!("P6\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push(((x * 7 + seed * 13) % 256) as u8);
            bytes.push(((y * 11 + seed * 3) % 256) as u8);
            bytes.push(((x * y + seed) % 256) as u8);
        }
    }
    fs::write(path, bytes).unwrap();
}

pub struct Corpus {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub friends: Vec<Friend>,
}

#[derive(Debug, Clone)]
pub struct Friend {
    pub name: String,
    pub photo: PathBuf,
    pub face: (u32, u32, u32, u32),
}

/// `n` friends, one photo each, sized and boxed differently. Each photo gets a
/// sidecar whose first box equals its tag-manifest box, plus a decoy second
/// box, so the jack and jill routes see the same face.
pub fn synthetic_corpus(dir: &Path, n: usize) -> Corpus {
    fs::create_dir_all(dir).unwrap();
    let mut friends = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n {
        let name = format!("friend{i:03}");
        let (w, h) = (40 + (i % 7) * 3, 30 + (i % 5) * 4);
        let photo = dir.join(format!("{name}.ppm"));
        write_raw_ppm(&photo, w, h, i);
        let face = (
            (i % 5) as u32,
            (i % 3) as u32,
            10 + (i % 4) as u32,
            12 + (i % 6) as u32,
        );
        let boxes = serde_json::json!([
            {"x": face.0, "y": face.1, "w": face.2, "h": face.3},
            {"x": 0, "y": 0, "w": 2, "h": 2}
        ]);
        fs::write(
            dir.join(format!("{name}.ppm.faces.json")),
            boxes.to_string(),
        )
        .unwrap();
        rows.push(serde_json::json!({
            "photo_id": name,
            "photo_path": format!("{name}.ppm"),
            "friend_name": name,
            "box": {"x": face.0, "y": face.1, "w": face.2, "h": face.3}
        }));
        friends.push(Friend { name, photo, face });
    }
    let manifest = dir.join("manifest.json");
    fs::write(&manifest, serde_json::to_vec_pretty(&rows).unwrap()).unwrap();
    Corpus {
        dir: dir.to_path_buf(),
        manifest,
        friends,
    }
}

/// Applies moves to a row-major copy of the cells with plain index
/// arithmetic: a row delta moves cells right, a column delta moves them down.
pub fn oracle_replay(cells: &[ImageId], moves: &[tetrad::grid::Move]) -> Vec<ImageId> {
    let mut g = cells.to_vec();
    for m in moves {
        let mut next = g.clone();
        let d = m.delta as isize;
        match m.axis {
            tetrad::grid::Axis::Row => {
                for c in 0..COLS {
                    let to = (c as isize + d).rem_euclid(COLS as isize) as usize;
                    next[m.index * COLS + to] = g[m.index * COLS + c].clone();
                }
            }
            tetrad::grid::Axis::Col => {
                for r in 0..ROWS {
                    let to = (r as isize + d).rem_euclid(ROWS as isize) as usize;
                    next[to * COLS + m.index] = g[r * COLS + m.index].clone();
                }
            }
        }
        g = next;
    }
    g
}
