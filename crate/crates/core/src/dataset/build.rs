use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::airset::{generate_air_set, AugmentedAir};
use super::config::PipelineConfig;
use super::manifest::{Manifest, ManifestHeader, ManifestRow, Partition, FORMAT_VERSION};
use super::mix::{mix_parts, mix_sample, select_segment, MixRecipe};
use super::segment::{list_wavs, segment_corpus, segment_signal, Segment};
use crate::air::Air;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::synth::{speech_surrogate, white_noise, SyntheticAir};
use crate::wav::{read_wav, write_wav};

const SYNTH_NOISE_RMS: f64 = 0.05;

/// Split `n` items by `fractions` with the largest-remainder rule; ties go
/// to the earlier partition.
pub fn allocate(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let total: f64 = fractions.iter().sum();
    let quotas: Vec<f64> = fractions.iter().map(|f| n as f64 * f / total).collect();
    let mut counts = [0usize; 3];
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c = q.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &k in order.iter().take(n - assigned) {
        counts[k] += 1;
    }
    counts
}

/// Shuffle `items` with `seed` and deal them into partitions.
fn split<T>(mut items: Vec<T>, fractions: [f64; 3], seed: u64) -> BTreeMap<Partition, Vec<T>> {
    items.shuffle(&mut stream_rng(seed));
    let counts = allocate(items.len(), fractions);
    let mut out = BTreeMap::new();
    let mut rest = items.into_iter();
    for (p, c) in Partition::ALL.into_iter().zip(counts) {
        out.insert(p, rest.by_ref().take(c).collect());
    }
    out
}

/// Round to the precision the WAV files store, so in-memory sources match
/// what a later regeneration reads back.
fn quantized(air: &Air) -> Air {
    air.with_samples(air.samples().iter().map(|&v| v as f32 as f64).collect())
}

struct Material {
    speech: Vec<Segment>,
    noise: Vec<Segment>,
    airs: Vec<Air>,
}

fn gather(config: &PipelineConfig) -> Result<Material> {
    let fs = config.sample_rate;
    let seed = config.master_seed;
    let synth = config.sources.synthetic.clone().unwrap_or_default();

    let speech = match &config.sources.speech_dir {
        Some(dir) => segment_corpus(dir, &list_wavs(dir)?, config.speech_chunk, Some(config.target_loudness), fs)?,
        None => {
            let mut out = Vec::new();
            for s in 0..synth.speakers {
                let tilt = 0.3 + 0.6 * s as f64 / synth.speakers as f64;
                for f in 0..synth.files_per_speaker {
                    let key = ((s as u64) << 20) | f as u64;
                    let x = speech_surrogate(synth.file_duration, fs, tilt, derive_seed(seed, stream::SYNTH, key));
                    let group = format!("spk{s:02}");
                    out.extend(segment_signal(
                        &format!("{group}_f{f:02}"),
                        &group,
                        &x,
                        config.speech_chunk,
                        Some(config.target_loudness),
                    )?);
                }
            }
            out
        }
    };

    let noise = match &config.sources.noise_dir {
        Some(dir) => segment_corpus(dir, &list_wavs(dir)?, config.noise_chunk, None, fs)?,
        None => {
            let mut out = Vec::new();
            for k in 0..synth.noise_files {
                let key = (1u64 << 40) | k as u64;
                let x = white_noise(synth.noise_duration, fs, SYNTH_NOISE_RMS, derive_seed(seed, stream::SYNTH, key));
                let id = format!("noise{k:02}");
                out.extend(segment_signal(&id, &id, &x, config.noise_chunk, None)?);
            }
            out
        }
    };

    let airs = match &config.sources.air_dir {
        Some(dir) => {
            let mut out = Vec::new();
            for file in list_wavs(dir)? {
                match read_wav(&file) {
                    Ok(a) if a.sample_rate() == fs => out.push(a),
                    Ok(a) => warn!("skipping {}: {} Hz, pipeline runs at {fs} Hz", file.display(), a.sample_rate()),
                    Err(e) => warn!("skipping {}: {e}", file.display()),
                }
            }
            out
        }
        None => (0..synth.airs)
            .map(|k| {
                let frac = if synth.airs > 1 { k as f64 / (synth.airs - 1) as f64 } else { 0.5 };
                let t60 = 0.3 + 0.9 * frac;
                let drr = 2.0 + 8.0 * frac;
                let key = (2u64 << 40) | k as u64;
                SyntheticAir::new(t60, drr, fs).generate(derive_seed(seed, stream::SYNTH, key))
            })
            .collect(),
    };

    if speech.is_empty() {
        return Err(Error::Shortfall(format!(
            "no speech segments of {} s available",
            config.speech_chunk
        )));
    }
    if noise.is_empty() {
        return Err(Error::Shortfall(format!(
            "no noise segments of {} s available",
            config.noise_chunk
        )));
    }
    if airs.is_empty() {
        return Err(Error::Shortfall("no seed AIRs available".into()));
    }
    Ok(Material { speech, noise, airs })
}

struct Job<'a> {
    row: usize,
    partition: Partition,
    speech: &'a (String, Air, String),
    airs: &'a [(String, Air, f64, f64)],
    noises: &'a [(String, Air)],
}

/// Generate the full dataset under `out`: source WAVs in `sources/`,
/// mixtures in `mix/{partition}/`, plus `header.json` and
/// `manifest.jsonl`. The result depends only on the source files and the
/// config, including its master seed.
pub fn build_dataset(config: &PipelineConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| build_inner(config, out)),
        None => build_inner(config, out),
    }
}

fn build_inner(config: &PipelineConfig, out: &Path) -> Result<Manifest> {
    let seed = config.master_seed;
    let fs = config.sample_rate;
    let fractions = config.partitions.as_array();
    let calibration = config.calibration.unwrap_or_default();
    calibration.t60.validate()?;
    calibration.drr.validate()?;

    let material = gather(config)?;
    info!(
        "sources: {} speech segments, {} noise segments, {} seed AIRs",
        material.speech.len(),
        material.noise.len(),
        material.airs.len()
    );

    let augmented = generate_air_set(
        &material.airs,
        config.augmentations_per_air,
        config.t60_range,
        config.drr_range,
        derive_seed(seed, stream::AIR_DRAW, 0),
        Some(&calibration),
    )?;
    info!("{} augmented AIRs", augmented.len());

    // sources are written first; everything downstream uses the stored precision
    let speech: Vec<(String, Air, String)> = material
        .speech
        .par_iter()
        .map(|s| {
            let rel = format!("sources/speech/{}.wav", s.id());
            let audio = quantized(&s.audio);
            write_wav(out.join(&rel), &audio)?;
            Ok((rel, audio, s.group.clone()))
        })
        .collect::<Result<_>>()?;
    let noises: Vec<(String, Air)> = material
        .noise
        .par_iter()
        .map(|s| {
            let rel = format!("sources/noise/{}.wav", s.id());
            let audio = quantized(&s.audio);
            write_wav(out.join(&rel), &audio)?;
            Ok((rel, audio))
        })
        .collect::<Result<_>>()?;
    let airs: Vec<(String, Air, f64, f64)> = augmented
        .par_iter()
        .map(|a: &AugmentedAir| {
            let rel = format!("sources/air/air{:03}_{:04}.wav", a.source_index, a.draw_index);
            let air = quantized(&a.air);
            write_wav(out.join(&rel), &air)?;
            Ok((rel, air, a.label_t60, a.label_drr))
        })
        .collect::<Result<_>>()?;

    let speakers: Vec<String> = speech
        .iter()
        .map(|s| s.2.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let speaker_parts = split(speakers, fractions, derive_seed(seed, stream::SPEAKER_SPLIT, 0));
    let speaker_partition: BTreeMap<&str, Partition> = speaker_parts
        .iter()
        .flat_map(|(p, v)| v.iter().map(move |s| (s.as_str(), *p)))
        .collect();
    let air_parts = split((0..airs.len()).collect(), fractions, derive_seed(seed, stream::AIR_SPLIT, 0));
    let noise_parts = split((0..noises.len()).collect(), fractions, derive_seed(seed, stream::NOISE_SPLIT, 0));

    let mut pools = BTreeMap::new();
    for p in Partition::ALL {
        let n_speech = speech.iter().filter(|s| speaker_partition[s.2.as_str()] == p).count();
        let pa: Vec<_> = air_parts[&p].iter().map(|&i| airs[i].clone()).collect();
        let pn: Vec<_> = noise_parts[&p].iter().map(|&i| noises[i].clone()).collect();
        if n_speech > 0 && (pa.is_empty() || pn.is_empty()) {
            return Err(Error::Shortfall(format!(
                "partition {p} has {n_speech} speech segments but {} AIRs and {} noise segments",
                pa.len(),
                pn.len()
            )));
        }
        pools.insert(p, (pa, pn));
    }

    let mut jobs = Vec::new();
    for p in Partition::ALL {
        let (pa, pn) = &pools[&p];
        for s in speech.iter().filter(|s| speaker_partition[s.2.as_str()] == p) {
            for _ in 0..config.mixes_per_segment {
                jobs.push(Job {
                    row: jobs.len(),
                    partition: p,
                    speech: s,
                    airs: pa,
                    noises: pn,
                });
            }
        }
    }

    let segment_len = (config.segment_length * fs as f64).round() as usize;
    let rows: Vec<ManifestRow> = jobs
        .par_iter()
        .map(|job| make_row(job, config, segment_len, out))
        .collect::<Result<_>>()?;
    info!("{} mixtures written", rows.len());

    let manifest = Manifest {
        header: ManifestHeader {
            version: FORMAT_VERSION,
            sample_rate: fs,
            rows: rows.len(),
            calibration,
            config: config.clone(),
        },
        rows,
    };
    manifest.write(out)?;
    Ok(manifest)
}

fn make_row(job: &Job<'_>, config: &PipelineConfig, segment_len: usize, out: &Path) -> Result<ManifestRow> {
    let row_seed = derive_seed(config.master_seed, stream::ROW, job.row as u64);
    let mut rng = stream_rng(row_seed);
    let (air_ref, air, label_t60, label_drr) = &job.airs[rng.gen_range(0..job.airs.len())];
    let (noise_ref, noise) = &job.noises[rng.gen_range(0..job.noises.len())];
    let snr = config.snr_range[0] + (config.snr_range[1] - config.snr_range[0]) * rng.gen::<f64>();
    let noise_shift = rng.gen_range(0..noise.len());
    let (speech_ref, speech, speaker) = job.speech;

    let full = mix_parts(speech, air, noise, snr, noise_shift)?.mixture();
    let segment_start = select_segment(
        &full,
        segment_len,
        derive_seed(config.master_seed, stream::SEGMENT, job.row as u64),
    );
    let recipe = MixRecipe {
        speech_ref: speech_ref.clone(),
        air_ref: air_ref.clone(),
        noise_ref: noise_ref.clone(),
        snr,
        noise_shift,
        segment_start,
        segment_len: segment_len.min(full.len()),
        seed: row_seed,
    };
    let end = recipe.segment_start + recipe.segment_len;
    let mixture = Air::new(full[recipe.segment_start..end].to_vec(), speech.sample_rate())?;
    let rel = format!("mix/{}/{:07}.wav", job.partition, job.row);
    write_wav(out.join(&rel), &mixture)?;
    Ok(ManifestRow {
        row: job.row,
        mixture: rel,
        partition: job.partition,
        speaker: speaker.clone(),
        recipe,
        label_t60: *label_t60,
        label_drr: *label_drr,
    })
}

/// Rebuild a row's mixture from the source files its recipe names.
pub fn regenerate_row(dataset_dir: &Path, row: &ManifestRow) -> Result<Air> {
    let load = |rel: &str| read_wav(dataset_dir.join(rel));
    let r = &row.recipe;
    mix_sample(r, &load(&r.speech_ref)?, &load(&r.air_ref)?, &load(&r.noise_ref)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder() {
        assert_eq!(allocate(10, [0.6, 0.2, 0.2]), [6, 2, 2]);
        assert_eq!(allocate(2, [0.6, 0.2, 0.2]), [1, 1, 0]);
        assert_eq!(allocate(7, [0.6, 0.2, 0.2]), [4, 2, 1]);
        assert_eq!(allocate(0, [0.6, 0.2, 0.2]), [0, 0, 0]);
        assert_eq!(allocate(3, [1.0, 0.0, 0.0]), [3, 0, 0]);
    }

    #[test]
    fn split_is_a_partition() {
        let parts = split((0..11).collect::<Vec<_>>(), [0.6, 0.2, 0.2], 4);
        let mut all: Vec<_> = parts.values().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
    }
}
