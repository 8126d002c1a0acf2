#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evdi::dataio;
use evdi::image::Domain;
use evdi::ImageBuffer;

pub fn evdi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evdi"))
        .args(args)
        .env_remove("EVDI_THREADS")
        .output()
        .expect("run evdi")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

pub fn ok(args: &[&str]) -> String {
    let o = evdi(args);
    assert_eq!(code(&o), 0, "{args:?}\n{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn texture(u: f64, y: f64) -> f64 {
    use std::f64::consts::PI;
    0.5 + 0.25 * (2.0 * PI * u / 23.0 + 0.3).sin() + 0.15 * (2.0 * PI * u / 7.3 + 1.1).sin() + 0.05 * (2.0 * PI * y / 11.0).sin()
}

/// `n` PFM frames at 1 kHz of a texture drifting at `speed` px/s.
pub fn frames_dir(root: &Path, n: usize, w: usize, h: usize, speed: f64, channels: usize) -> PathBuf {
    let dir = root.join("frames");
    fs::create_dir_all(&dir).unwrap();
    for k in 0..n {
        let t = k as f64 * 1e-3;
        let img = ImageBuffer::from_fn(w, h, channels, Domain::Linear, |x, y, c| {
            texture(x as f64 - speed * t + 3.0 * c as f64, y as f64)
        })
        .unwrap();
        dataio::images::write_pfm(&dir.join(format!("{k:05}.pfm")), &img).unwrap();
    }
    dir
}

pub fn simulate(root: &Path, n: usize, speed: f64, extra: &[&str]) -> PathBuf {
    let frames = frames_dir(root, n, 40, 30, speed, 1);
    let out = root.join("ds");
    let mut args = vec!["simulate", "--frames", s(&frames), "--out", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out.join("manifest.json")
}

pub fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Every command with `--threads 1` and `--threads 8` writes identical bytes.
pub fn run_all_commands(root: &Path, frames: &Path, threads: &str) -> Vec<(String, Vec<u8>)> {
    let out = root.join(format!("t{threads}"));
    let ds = out.join("ds");
    let m = ds.join("manifest.json");
    let t = ["--threads", threads];
    let run = |args: &[&str]| {
        let mut a = t.to_vec();
        a.extend_from_slice(args);
        ok(&a)
    };
    let mut stdout = run(&["simulate", "--frames", s(frames), "--out", s(&ds)]);
    stdout += &run(&["deblur", "--manifest", s(&m), "--view", "3", "--out", s(&out.join("deblur/lat"))]);
    stdout += &run(&["deblur", "--manifest", s(&m), "--view", "3", "--at", "150000", "--out", s(&out.join("deblur/at"))]);
    stdout += &run(&["reconstruct", "--manifest", s(&m), "--view", "2", "--rate", "500", "--out", s(&out.join("video"))]);
    stdout += &run(&["calibrate", "--manifest", s(&m), "--fit-response", "--asymmetric", "--out", s(&out.join("report.json"))]);
    stdout += &run(&["priors", "--manifest", s(&m), "--out", s(&out.join("priors"))]);
    stdout += &run(&["evaluate", "--pred", s(&out.join("priors")), "--gt", s(&out.join("priors")), "--out", s(&out.join("eval.txt"))]);
    // paths differ between the runs; everything else must not
    let stdout = stdout.replace(s(&out), "OUT");
    let mut files = tree_bytes(&out);
    files.push(("stdout".into(), stdout.into_bytes()));
    files
}

