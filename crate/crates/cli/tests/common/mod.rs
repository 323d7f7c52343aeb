#![allow(dead_code)]

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ukiyo_core::corpus::{LandmarkKind, LandmarkSet};

pub const IMAGE_SIDE: u32 = 64;
pub const PAINTERS: [&str; 3] = ["Hokusai", "Kunisada", "Utamaro"];

pub fn ukiyo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ukiyo"))
}

pub fn run(args: &[&str]) -> Output {
    ukiyo().args(args).output().expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "ukiyo {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Eyes and mouth in a plausible frontal layout, the remaining points on a
/// ring around them, all jittered.
pub fn synthetic_face(image_id: &str, face_index: u32, rng: &mut impl Rng) -> LandmarkSet {
    use LandmarkKind::*;
    let fixed = [
        (LeftEyeCenter, 0.40, 0.40),
        (RightEyeCenter, 0.60, 0.40),
        (MouthLeft, 0.43, 0.66),
        (MouthRight, 0.57, 0.66),
    ];
    let mut set = LandmarkSet::new(image_id, face_index, IMAGE_SIDE, IMAGE_SIDE);
    for (i, kind) in LandmarkKind::ALL.iter().enumerate() {
        let (x, y) = match fixed.iter().find(|f| f.0 == *kind) {
            Some(&(_, x, y)) => (x, y),
            None => {
                let t = TAU * i as f64 / 30.0;
                (0.5 + 0.3 * t.cos(), 0.5 + 0.3 * t.sin())
            }
        };
        let (dx, dy): (f64, f64) = (rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01));
        set = set.with_point(*kind, x + dx, y + dy);
    }
    set
}

/// Mixtures of four colors inside [0.2, 0.8] with smooth weights.
pub fn in_hull_image(seed: u64, side: u32) -> (RgbImage, [[f64; 3]; 4]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let palette: [[f64; 3]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(0.2..0.8)));
    let phase: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
    let img = RgbImage::from_fn(side, side, |x, y| {
        let (u, v) = (f64::from(x) / f64::from(side), f64::from(y) / f64::from(side));
        let w: [f64; 4] = std::array::from_fn(|k| 1.1 + (TAU * (u + 0.7 * v * k as f64) + phase[k]).sin());
        let total: f64 = w.iter().sum();
        Rgb(std::array::from_fn(|c| {
            let v: f64 = (0..4).map(|k| w[k] / total * palette[k][c]).sum();
            (v * 255.0).round() as u8
        }))
    });
    (img, palette)
}

pub const TWO_A: [u8; 3] = [30, 60, 200];
pub const TWO_B: [u8; 3] = [240, 200, 20];

pub fn two_color_image() -> RgbImage {
    RgbImage::from_fn(24, 18, |x, y| if (x + 2 * y) % 3 == 0 { Rgb(TWO_A) } else { Rgb(TWO_B) })
}

/// Input files for every subcommand, in a temporary directory.
pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let mut rng = ChaCha8Rng::seed_from_u64(11);

        let mut metadata = String::from("object_id,title,painter,format,year\n");
        let mut detected = String::new();
        let mut expert = String::new();
        fs::create_dir(root.join("images")).unwrap();
        for i in 0..12u32 {
            let id = format!("print{i:02}");
            let year = if i == 5 { "c. 1800".to_string() } else { (1760 + 7 * i).to_string() };
            metadata.push_str(&format!("{id},Print {i},{},oban,{year}\n", PAINTERS[i as usize % 3]));
            for face in 0..2 {
                let set = synthetic_face(&id, face, &mut rng);
                let mut noisy = set.clone();
                for p in noisy.points.values_mut() {
                    p.x += rng.random_range(-0.05..0.05);
                    p.y += rng.random_range(-0.05..0.05);
                }
                expert.push_str(&set.to_json_line());
                expert.push('\n');
                detected.push_str(&noisy.to_json_line());
                detected.push('\n');
            }
            let img = RgbImage::from_fn(IMAGE_SIDE, IMAGE_SIDE, |x, y| Rgb([(x * 4) as u8, (y * 4) as u8, (i * 20) as u8]));
            img.save(root.join("images").join(format!("{id}.png"))).unwrap();
        }
        fs::write(root.join("metadata.csv"), metadata).unwrap();
        fs::write(root.join("expert.jsonl"), &expert).unwrap();
        fs::write(root.join("detected.jsonl"), detected).unwrap();
        fs::write(root.join("landmarks.jsonl"), expert).unwrap();

        in_hull_image(3, 48).0.save(root.join("art.png")).unwrap();
        in_hull_image(4, 32).0.save(root.join("reference.png")).unwrap();
        two_color_image().save(root.join("two.png")).unwrap();
        Fixture { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }
}

/// Every regular file below `dir`, with its bytes, in path order.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

/// Runs every file-producing subcommand on the fixture, writing into `out`.
/// Standard output of the commands that print is saved alongside.
pub fn run_pipeline(f: &Fixture, out: &Path) {
    let o = |name: &str| out.join(name).to_string_lossy().into_owned();
    let save = |name: &str, output: Output| fs::write(out.join(name), output.stdout).unwrap();

    run_ok(&["ingest", "--metadata", &f.arg("metadata.csv"), "--landmarks", &f.arg("landmarks.jsonl"), "--out", &o("corpus.jsonl")]);
    run_ok(&["stats", "--corpus", &o("corpus.jsonl"), "--histogram", &o("hist.csv"), "--painters", &o("painters.csv")]);
    save("stats.txt", run_ok(&["stats", "--corpus", &o("corpus.jsonl"), "--bin-width", "25"]));
    run_ok(&["align", "--landmarks", &f.arg("landmarks.jsonl"), "--images", &f.arg("images"), "--out", &o("crops"), "--size", "32"]);
    run_ok(&["features", "--corpus", &o("corpus.jsonl"), "--out", &o("features.csv")]);
    run_ok(&[
        "quality", "--detected", &f.arg("detected.jsonl"), "--expert", &f.arg("expert.jsonl"),
        "--out", &o("quality.csv"), "--hq-out", &o("hq.txt"),
    ]);
    save("hq_from_report.txt", run_ok(&["quality", "--report", &o("quality.csv"), "--threshold", "2.5"]));
    run_ok(&["embed", "--features", &o("features.csv"), "--method", "pca", "--zscore", "--out", &o("pca.csv"), "--projection", &o("pca.json")]);
    run_ok(&[
        "embed", "--features", &o("features.csv"), "--method", "lda", "--corpus", &o("corpus.jsonl"),
        "--out", &o("lda.csv"), "--projection", &o("lda.json"),
    ]);
    run_ok(&[
        "embed", "--features", &o("features.csv"), "--method", "tsne", "--perplexity", "5", "--iters", "300",
        "--seed", "9", "--out", &o("tsne.csv"),
    ]);
    run_ok(&["separate", "--in", &f.arg("art.png"), "--k", "4", "--seed", "5", "--out", &o("layers"), "--error-map"]);

    let mut palette: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("layers/art.palette.json")).unwrap()).unwrap();
    palette["colors"].as_array_mut().unwrap().reverse();
    fs::write(out.join("reversed.json"), palette.to_string()).unwrap();
    let stack = o("layers/art");
    run_ok(&["recolor", "--layers", &stack, "--palette", &o("reversed.json"), "--out", &o("recolor.png")]);
    run_ok(&[
        "transfer", "--layers", &stack, "--reference", &f.arg("reference.png"), "--seed", "2",
        "--out", &o("transfer.png"), "--palette-out", &o("transfer.palette.json"),
    ]);
    run_ok(&["compose", "--layers", &stack, "--out", &o("compose.png")]);
}
