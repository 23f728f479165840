use std::fmt::Write as _;
use std::path::Path;

use airforge_core::dataset::{
    build_dataset, fit_calibration, regenerate_row, CalibrationSet, Manifest, Partition,
    PipelineConfig,
};
use airforge_core::eval::{report, ReportFormat};
use airforge_core::levels::{measure, LevelMethod};
use airforge_core::wav::{read_wav, write_wav};
use airforge_core::{drr_of, estimate_t60, evaluate, AugmentSpec};

use crate::error::CliError;
use crate::predictions::{load_labels, pair};
use crate::{
    AnalyzeArgs, AugmentArgs, CalibrateArgs, EvalArgs, FormatArg, GenDatasetArgs, LevelArgs,
    MethodArg, MixArgs, Param,
};

fn read_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let doc = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&doc)?)
}

/// Accepts a bare calibration set or any document with a `calibration` field
/// (a dataset header.json, for one).
fn load_calibration(path: &Path) -> Result<CalibrationSet, CliError> {
    let mut value = read_json(path)?;
    if let Some(inner) = value.get_mut("calibration") {
        value = inner.take();
    }
    let set: CalibrationSet = serde_json::from_value(value)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    set.t60.validate()?;
    set.drr.validate()?;
    Ok(set)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let air = read_wav(&args.input)?;
    let mut t60 = estimate_t60(&air)?;
    let mut drr = drr_of(&air)?;
    let label = match &args.calibration {
        Some(path) => {
            let cal = load_calibration(path)?;
            t60 = cal.t60.apply(t60);
            drr = cal.drr.apply(drr);
            "calibrated"
        }
        None => "raw",
    };
    Ok(if args.json {
        format!("{}\n", serde_json::json!({"values": label, "t60_s": t60, "drr_db": drr}))
    } else {
        format!("values: {label}\nt60_s: {t60}\ndrr_db: {drr}\n")
    })
}

pub fn augment(args: &AugmentArgs) -> Result<String, CliError> {
    let spec = AugmentSpec {
        target_t60: args.t60,
        target_drr: args.drr,
        seed: args.seed,
    };
    // reject bad targets before touching the input file
    spec.validate()?;
    let air = read_wav(&args.input)?;
    let (out, rep) = airforge_core::augment(&air, &spec)?;
    write_wav(&args.out, &out)?;
    if let Some(path) = &args.report {
        let doc = serde_json::to_string_pretty(&rep)?;
        std::fs::write(path, doc + "\n")
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    let t60 = rep
        .achieved_t60
        .map_or("none".to_string(), |v| v.to_string());
    Ok(format!(
        "achieved_t60_s: {t60}\nachieved_drr_db: {}\nalpha: {}\nclipped: {}\n",
        rep.achieved_drr, rep.alpha, rep.clipped
    ))
}

pub fn gen_dataset(
    args: &GenDatasetArgs,
    threads: Option<usize>,
    level_from_flag: bool,
) -> Result<String, CliError> {
    let mut config = PipelineConfig::load(&args.config)?;
    if threads.is_some() {
        config.threads = threads;
    }
    if let (false, Some(level)) = (level_from_flag, &config.log_level) {
        let filter = level
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown log level {level:?}")))?;
        log::set_max_level(filter);
    }
    let manifest = build_dataset(&config, &args.out)?;
    let mut s = format!("rows: {}\n", manifest.rows.len());
    for p in Partition::ALL {
        let n = manifest.rows.iter().filter(|r| r.partition == p).count();
        let _ = writeln!(s, "{p}: {n}");
    }
    Ok(s)
}

pub fn mix(args: &MixArgs) -> Result<String, CliError> {
    let manifest = Manifest::read(&args.dataset)?;
    let row = manifest
        .rows
        .iter()
        .find(|r| r.row == args.row)
        .ok_or_else(|| {
            CliError::Data(format!(
                "row {} not in manifest ({} rows)",
                args.row,
                manifest.rows.len()
            ))
        })?;
    let regen = regenerate_row(&args.dataset, row)?;
    if let Some(out) = &args.out {
        write_wav(out, &regen)?;
    }
    let stored = read_wav(args.dataset.join(&row.mixture))?;
    let matches = stored.sample_rate() == regen.sample_rate()
        && stored.len() == regen.len()
        && regen
            .samples()
            .iter()
            .zip(stored.samples())
            .all(|(a, b)| (*a as f32) as f64 == *b);
    if !matches {
        return Err(CliError::Data(format!(
            "row {} does not reproduce {}",
            row.row, row.mixture
        )));
    }
    Ok(format!("row {}: {} reproduced exactly\n", row.row, row.mixture))
}

pub fn level(args: &LevelArgs) -> Result<String, CliError> {
    let signal = read_wav(&args.input)?;
    let (method, unit) = match args.method {
        MethodArg::P56 => (LevelMethod::P56Active, "dBov"),
        MethodArg::Rms => (LevelMethod::Rms, "dBFS"),
        MethodArg::Lufs => (LevelMethod::LufsIntegrated, "LUFS"),
    };
    let rep = measure(&signal, method)?;
    if args.json {
        return Ok(format!("{}\n", serde_json::to_string(&rep)?));
    }
    let mut s = format!("level: {} {unit}\n", rep.value);
    if let Some(a) = rep.activity {
        let _ = writeln!(s, "activity: {a}");
    }
    if rep.silent {
        s.push_str("silent: true\n");
    }
    Ok(s)
}

fn report_format(f: FormatArg) -> ReportFormat {
    match f {
        FormatArg::Text => ReportFormat::Text,
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    }
}

pub fn eval(args: &EvalArgs) -> Result<String, CliError> {
    let rows = load_labels(&args.labels)?;
    let paired = pair(&args.pred, &rows, args.param)?;
    let stats = evaluate(&paired.estimates, &paired.labels)?;
    let mut s = report(&args.method, &stats, report_format(args.format));
    if !s.ends_with('\n') {
        s.push('\n');
    }
    Ok(s)
}

pub fn calibrate(args: &CalibrateArgs) -> Result<String, CliError> {
    let rows = load_labels(&args.labels)?;
    let paired = pair(&args.pred, &rows, args.param)?;
    let fitted = fit_calibration(&paired.estimates, &paired.labels)?;
    let mut set = match &args.out {
        Some(path) if path.exists() => load_calibration(path)?,
        _ => CalibrationSet::default(),
    };
    match args.param {
        Param::T60 => set.t60 = fitted,
        Param::Drr => set.drr = fitted,
    }
    let doc = serde_json::to_string_pretty(&set)? + "\n";
    match &args.out {
        Some(path) => {
            std::fs::write(path, &doc)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok(format!("slope: {}\nintercept: {}\n", fitted.slope, fitted.intercept))
        }
        None => Ok(doc),
    }
}
