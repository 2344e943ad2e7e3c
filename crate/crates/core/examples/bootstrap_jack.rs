// Detector-driven bootstrap over a photo directory with a worker pool.
// Results stream in as friends finish; the final index does not depend on
// the worker count.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use tetrad::bootstrap::{
    friends_from_corpus, run_pipeline, sidecar_path, Mode, PipelineConfig, PipelineEvent,
    SidecarDetector,
};
use tetrad::ppm::Ppm;

// The bundled detector reads `<photo>.faces.json`; a real one would look at
// the pixels.
fn write_corpus(dir: &Path, friends: usize) -> Result<(), Box<dyn std::error::Error>> {
    for i in 0..friends {
        let path = dir.join(format!("friend{i:02}.ppm"));
        Ppm::from_fn(40, 40, |x, y| [(x + y) as u8, (i * 3) as u8, (x * y) as u8]).write(&path)?;
        if i % 10 == 9 {
            continue; // nobody found in this one
        }
        let boxes = serde_json::json!([{"x": i % 8, "y": 2, "w": 20, "h": 24}, {"x": 30, "y": 30, "w": 8, "h": 8}]);
        fs::write(sidecar_path(&path), boxes.to_string())?;
    }
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let corpus = tmp.path().join("photos");
    fs::create_dir_all(&corpus)?;
    write_corpus(&corpus, 50)?;

    let mut indexes = Vec::new();
    for workers in [1, 8] {
        let config = PipelineConfig {
            mode: Mode::Jack,
            workers,
            output_dir: tmp.path().join(format!("out-{workers}")),
        };
        let handle = run_pipeline(
            config,
            friends_from_corpus(&corpus)?,
            Arc::new(SidecarDetector),
        )?;
        let progress = handle.progress();
        let mut shown = 0;
        for event in handle.iter() {
            if shown < 3 {
                match event {
                    PipelineEvent::Extracted(f) => println!("  + {} {}", f.friend_name, f.image_id),
                    PipelineEvent::Skipped(s) => println!("  - {} ({})", s.friend_name, s.reason),
                }
                shown += 1;
            }
        }
        let snap = progress.snapshot();
        let outcome = handle.join()?;
        println!(
            "workers {workers}: {}/{} done, {} faces, {} skipped",
            snap.done,
            snap.total,
            outcome.images.len(),
            outcome.skipped.len()
        );
        indexes.push(fs::read(outcome.index_path)?);
    }
    assert_eq!(indexes[0], indexes[1]);
    println!("index.json identical for 1 and 8 workers");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
