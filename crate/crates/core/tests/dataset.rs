use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use airforge_core::dataset::{
    build_dataset, mix_parts, read_rows, regenerate_row, Manifest, Partition, PipelineConfig,
};
use airforge_core::levels::{active_speech_level, rms_level};
use airforge_core::synth::{speech_surrogate, white_noise, SyntheticAir};
use airforge_core::wav::{read_wav, write_wav};
use airforge_core::{drr_of, estimate_t60, Air, Error};

fn desk_build(seed: u64) -> (tempfile::TempDir, Manifest) {
    let dir = tempfile::tempdir().unwrap();
    let manifest = build_dataset(&PipelineConfig::synthetic(seed), dir.path()).unwrap();
    (dir, manifest)
}

#[test]
fn desk_scale_dataset() {
    let (dir, m) = desk_build(3);
    let cfg = PipelineConfig::synthetic(3);

    // 2 speakers x 16 s in 8 s chunks
    let segments: BTreeSet<&str> = m.rows.iter().map(|r| r.recipe.speech_ref.as_str()).collect();
    assert_eq!(segments.len(), 4);
    assert_eq!(m.rows.len(), segments.len() * cfg.mixes_per_segment);
    assert_eq!(m.header.rows, m.rows.len());

    let mut by_speaker: BTreeMap<&str, BTreeSet<Partition>> = BTreeMap::new();
    let mut by_air: BTreeMap<&str, BTreeSet<Partition>> = BTreeMap::new();
    let mut by_noise: BTreeMap<&str, BTreeSet<Partition>> = BTreeMap::new();
    for row in &m.rows {
        by_speaker.entry(&row.speaker).or_default().insert(row.partition);
        by_air.entry(&row.recipe.air_ref).or_default().insert(row.partition);
        by_noise.entry(&row.recipe.noise_ref).or_default().insert(row.partition);
        for rel in [&row.mixture, &row.recipe.speech_ref, &row.recipe.air_ref, &row.recipe.noise_ref] {
            assert!(dir.path().join(rel).is_file(), "{rel}");
        }
        assert!((-5.0..=20.0).contains(&row.recipe.snr));
        assert_eq!(row.recipe.segment_len, 64_000);
        assert_eq!(read_wav(dir.path().join(&row.mixture)).unwrap().len(), 64_000);
    }
    for parts in by_speaker.values().chain(by_air.values()).chain(by_noise.values()) {
        assert_eq!(parts.len(), 1);
    }

    let reread = Manifest::read(dir.path()).unwrap();
    assert_eq!(reread, m);
    assert_eq!(read_rows(&dir.path().join("manifest.jsonl")).unwrap(), m.rows);
}

#[test]
fn same_seed_same_manifest() {
    let (_a, ma) = desk_build(17);
    let (_b, mb) = desk_build(17);
    assert_eq!(ma, mb);
    let (_c, mc) = desk_build(18);
    assert_ne!(ma.rows, mc.rows);
}

#[test]
fn labels_are_reproducible_from_stored_airs() {
    let (dir, m) = desk_build(5);
    let mut seen = BTreeMap::new();
    for row in &m.rows {
        seen.insert(row.recipe.air_ref.clone(), (row.label_t60, row.label_drr));
    }
    let mut ok = 0;
    for (rel, (t60, drr)) in &seen {
        let air = read_wav(dir.path().join(rel)).unwrap();
        let t = estimate_t60(&air).unwrap();
        let d = drr_of(&air).unwrap();
        if (t / t60 - 1.0).abs() <= 0.07 && (d - drr).abs() <= 0.1 {
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.95 * seen.len() as f64, "{ok}/{}", seen.len());
}

#[test]
fn rows_regenerate_bit_exactly() {
    let (dir, m) = desk_build(9);
    for row in m.rows.iter().step_by(3) {
        let regen = regenerate_row(dir.path(), row).unwrap();
        let stored = read_wav(dir.path().join(&row.mixture)).unwrap();
        let quantised: Vec<f64> = regen.samples().iter().map(|&v| v as f32 as f64).collect();
        assert_eq!(quantised, stored.samples());
    }
}

#[test]
fn component_snr_matches_recipe() {
    let fs = 16_000;
    let speech = speech_surrogate(8.0, fs, 0.5, 3);
    let air = SyntheticAir::new(0.5, 5.0, fs).generate(4);
    let noise = white_noise(8.0, fs, 0.05, 5);
    for snr in [-5.0, 0.0, 7.5, 20.0] {
        let parts = mix_parts(&speech, &air, &noise, snr, 12_345).unwrap();
        let s = active_speech_level(&Air::new(parts.reverberant.clone(), fs).unwrap()).unwrap().value;
        let n = rms_level(&Air::new(parts.noise.clone(), fs).unwrap()).value;
        assert!((s - n - snr).abs() <= 0.1, "{snr}: {}", s - n);
    }
}

#[test]
fn insufficient_material_names_the_shortfall() {
    let mut cfg = PipelineConfig::synthetic(1);
    cfg.sources.synthetic.as_mut().unwrap().file_duration = 5.0;
    let dir = tempfile::tempdir().unwrap();
    match build_dataset(&cfg, dir.path()) {
        Err(Error::Shortfall(msg)) => assert!(msg.contains("speech"), "{msg}"),
        other => panic!("expected shortfall, got {other:?}"),
    }
}

fn write_corpus(root: &Path) {
    let fs = 16_000;
    for (spk, tilt) in [("f1", 0.3), ("m1", 0.6), ("f2", 0.8)] {
        let x = speech_surrogate(9.0, fs, tilt, tilt.to_bits());
        write_wav(root.join("speech").join(spk).join("read.wav"), &x).unwrap();
    }
    std::fs::write(root.join("speech/f1/broken.wav"), b"junk").unwrap();
    write_wav(root.join("noise/hum.wav"), &white_noise(9.0, fs, 0.1, 1)).unwrap();
    write_wav(root.join("noise/fan.wav"), &white_noise(9.0, fs, 0.1, 2)).unwrap();
    write_wav(root.join("noise/hiss.wav"), &white_noise(9.0, fs, 0.1, 3)).unwrap();
    write_wav(root.join("air/a.wav"), &SyntheticAir::new(0.5, 6.0, fs).generate(1)).unwrap();
    write_wav(root.join("air/b.wav"), &SyntheticAir::new(0.8, 3.0, fs).generate(2)).unwrap();
    write_wav(root.join("air/c.wav"), &SyntheticAir::new(0.4, 9.0, fs).generate(3)).unwrap();
}

#[test]
fn directory_sources() {
    let src = tempfile::tempdir().unwrap();
    write_corpus(src.path());
    let doc = serde_json::json!({
        "sources": {
            "speech_dir": src.path().join("speech"),
            "noise_dir": src.path().join("noise"),
            "air_dir": src.path().join("air"),
        },
        "partitions": {"train": 0.34, "val": 0.33, "test": 0.33},
        "augmentations_per_air": 2,
        "mixes_per_segment": 2,
        "master_seed": 4,
        "threads": 1
    });
    let cfg = PipelineConfig::from_json(&doc.to_string()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = build_dataset(&cfg, out.path()).unwrap();
    // three speakers, one 8 s chunk each, the unreadable file skipped
    assert_eq!(m.rows.len(), 3 * 2);
    let partitions: BTreeSet<Partition> = m.rows.iter().map(|r| r.partition).collect();
    assert_eq!(partitions.len(), 3);
    let speakers: BTreeSet<&str> = m.rows.iter().map(|r| r.speaker.as_str()).collect();
    assert_eq!(speakers, BTreeSet::from(["f1", "f2", "m1"]));
}
