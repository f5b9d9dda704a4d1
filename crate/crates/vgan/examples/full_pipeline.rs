//! The whole pipeline through the CLI entry point: synthesize phantoms,
//! preprocess, augment, train a tiny model, generate samples, and run the
//! verification suites.
//!
//! ```bash
//! cargo run --release -p vgan --example full_pipeline
//! ```

use vgan::cli::run;

fn step(label: &str, args: &[&str]) {
    println!("==> vgan {}", args[1..].join(" "));
    let code = run(args.iter().copied());
    assert_eq!(code, 0, "{label} exited with {code}");
}

fn main() {
    let out = std::env::temp_dir().join("vgan_pipeline_example");
    let _ = std::fs::remove_dir_all(&out);
    let outs = out.to_str().unwrap();

    let cfg_path = out.join("run.cfg");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(
        &cfg_path,
        "seed = 7\ntarget_stage = 1\nreals_per_phase = 32\nbatch_sizes = 4\nn_filters = 8\nlatent_dim = 16\naugment_k = 2\n",
    )
    .unwrap();
    let cfgs = cfg_path.to_str().unwrap();

    step("synthdata", &["vgan", "synthdata", "--count", "6", "--size", "32", "--seed", "7", "--out", outs]);
    let synth = out.join("synth");
    step(
        "preprocess",
        &["vgan", "preprocess", "--input", synth.to_str().unwrap(), "--target-dim", "8", "--seed", "7", "--out", outs],
    );
    let manifest = out.join("preprocess_manifest.tsv");
    step(
        "augment",
        &["vgan", "--config", cfgs, "--out", outs, "augment", "--manifest", manifest.to_str().unwrap()],
    );
    step(
        "train",
        &["vgan", "--config", cfgs, "--out", outs, "train", "--data", out.join("augmented").to_str().unwrap()],
    );
    let ckpt = out.join("checkpoint_final.vgan");
    step(
        "generate",
        &["vgan", "--config", cfgs, "--out", outs, "generate", "--checkpoint", ckpt.to_str().unwrap(), "--count", "2", "--upsample", "32"],
    );
    step("selftest", &["vgan", "selftest"]);

    println!("pipeline artifacts in {}", out.display());
}
