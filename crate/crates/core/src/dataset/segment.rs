use std::path::{Path, PathBuf};

use log::warn;

use crate::air::Air;
use crate::error::{Error, Result};
use crate::levels::normalize_loudness;
use crate::wav::read_wav;

/// A fixed-length chunk cut from a source file.
#[derive(Debug, Clone)]
pub struct Segment {
    /// Identifier of the source file.
    pub source: String,
    /// Speaker (or other grouping) the source belongs to.
    pub group: String,
    pub index: usize,
    pub audio: Air,
}

impl Segment {
    pub fn id(&self) -> String {
        format!("{}_{:03}", self.source, self.index)
    }
}

/// Non-overlapping `chunk`-second pieces of `signal`; a trailing remainder
/// shorter than `chunk` is dropped. With `target_loudness` each piece is
/// loudness-normalized and silent pieces are skipped.
pub fn segment_signal(
    source: &str,
    group: &str,
    signal: &Air,
    chunk: f64,
    target_loudness: Option<f64>,
) -> Result<Vec<Segment>> {
    if !(chunk > 0.0) {
        return Err(Error::InvalidArgument(format!("chunk must be positive, got {chunk}")));
    }
    let len = (chunk * signal.sample_rate() as f64).round() as usize;
    let mut out = Vec::new();
    for (index, piece) in signal.samples().chunks_exact(len).enumerate() {
        let audio = Air::from_parts(piece.to_vec(), signal.sample_rate());
        let audio = match target_loudness {
            Some(target) => match normalize_loudness(&audio, target) {
                Ok(a) => a,
                Err(e) => {
                    warn!("{source} chunk {index}: {e}, skipped");
                    continue;
                }
            },
            None => audio,
        };
        out.push(Segment {
            source: source.to_string(),
            group: group.to_string(),
            index,
            audio,
        });
    }
    Ok(out)
}

/// Group id for a source file: its parent directory below `root` when
/// nested, otherwise the file stem up to the first underscore.
pub fn group_of(root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).unwrap_or(file);
    if let Some(first) = rel.components().next().filter(|_| rel.components().count() > 1) {
        return first.as_os_str().to_string_lossy().into_owned();
    }
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.split('_').next().unwrap_or(&stem).to_string()
}

/// All `.wav` files under `dir`, sorted.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        let path = entry.path();
        if entry.file_type().is_file()
            && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        {
            out.push(path.to_path_buf());
        }
    }
    out.sort();
    Ok(out)
}

/// Segment every readable file under `root`. Unreadable files and files at
/// another sample rate are skipped with a warning.
pub fn segment_corpus(
    root: &Path,
    files: &[PathBuf],
    chunk: f64,
    target_loudness: Option<f64>,
    sample_rate: u32,
) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for file in files {
        let air = match read_wav(file) {
            Ok(a) => a,
            Err(e) => {
                warn!("skipping {}: {e}", file.display());
                continue;
            }
        };
        if air.sample_rate() != sample_rate {
            warn!(
                "skipping {}: {} Hz, pipeline runs at {sample_rate} Hz",
                file.display(),
                air.sample_rate()
            );
            continue;
        }
        let rel = file.strip_prefix(root).unwrap_or(file);
        let source = rel
            .with_extension("")
            .to_string_lossy()
            .replace(['/', '\\'], "__");
        out.extend(segment_signal(&source, &group_of(root, file), &air, chunk, target_loudness)?);
    }
    Ok(out)
}
