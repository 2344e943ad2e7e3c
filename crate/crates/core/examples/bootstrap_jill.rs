// Tag-driven bootstrap: every manifest row names a friend and the box around
// their face. One row points outside its photo and is skipped.

use std::fs;
use std::path::Path;

use tetrad::bootstrap::{ingest_tags, read_index};
use tetrad::ppm::Ppm;

fn write_corpus(dir: &Path, friends: usize) -> Result<(), Box<dyn std::error::Error>> {
    let mut rows = Vec::new();
    for i in 0..friends {
        let name = format!("friend{i:02}");
        let photo = Ppm::from_fn(48, 36, |x, y| [(x * 5) as u8, (y * 7) as u8, (i * 9) as u8]);
        photo.write(&dir.join(format!("{name}.ppm")))?;
        // friend07's box runs off the right edge
        let x = if i == 7 { 40 } else { 4 + (i % 6) as u32 };
        rows.push(serde_json::json!({
            "photo_id": name,
            "photo_path": format!("{name}.ppm"),
            "friend_name": name,
            "box": {"x": x, "y": 3, "w": 16, "h": 20}
        }));
    }
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&rows)?)?;
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    write_corpus(tmp.path(), 46)?;
    let outcome = ingest_tags(&tmp.path().join("manifest.json"), &tmp.path().join("out"))?;
    println!(
        "{} faces, {} skipped",
        outcome.images.len(),
        outcome.skipped.len()
    );
    for s in &outcome.skipped {
        println!("  skipped {}: {}", s.friend_name, s.reason);
    }
    let index = read_index(&outcome.index_path)?;
    for row in index.iter().take(3) {
        println!(
            "  {} {} {:?} -> {}",
            row.image_id, row.friend_name, row.face_box, row.crop_path
        );
    }
    assert_eq!(index.len(), 45);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
