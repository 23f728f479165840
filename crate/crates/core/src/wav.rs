//! WAV input/output. Reads integer or float PCM and keeps the first
//! channel; writes mono 32-bit float.

use std::fs;
use std::path::Path;

use crate::air::Air;
use crate::error::{Error, Result};

pub fn read_wav(path: impl AsRef<Path>) -> Result<Air> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .step_by(channels)
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
    };
    Air::new(samples, spec.sample_rate).map_err(|e| match e {
        Error::Degenerate(msg) => Error::Degenerate(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Write mono 32-bit float, via a temporary file renamed into place.
pub fn write_wav(path: impl AsRef<Path>, air: &Air) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("wav.tmp");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: air.sample_rate(),
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = hound::WavWriter::create(&tmp, spec).map_err(wav_err)?;
    for &s in air.samples() {
        writer.write_sample(s as f32).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
