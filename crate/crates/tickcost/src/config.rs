//! Run configuration: a TOML file with sections, overridable by flags.
//!
//! Every key is optional; missing keys take the defaults below. Unknown keys
//! are rejected so typos do not silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tickcost_core::event::{
    default_phases, default_schemes, BucketScheme, ComparisonScheme, EventPhase, PhaseLabel, PriceRule, SchemeLabel,
};
use tickcost_core::market::{default_windows, SampleLabel, SampleWindow};
use tickcost_core::mie::{SimParams, TradingStyle, DEFAULT_INTERVALS};
use tickcost_core::pipeline::VOL_WINDOW;
use tickcost_core::synth::{PeriodEffect, SynthConfig};
use tickcost_core::tca::MiMode;
use tickcost_core::Date;

use crate::error::{CliError, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    gen: RawGen,
    #[serde(default)]
    tca: RawTca,
    #[serde(default)]
    mie: RawMie,
    #[serde(default)]
    birdseye: RawBirdseye,
    #[serde(default)]
    deepdive: RawDeepdive,
    #[serde(default)]
    buckets: RawBuckets,
    #[serde(default)]
    sample: Vec<RawSample>,
    #[serde(default)]
    phase: Vec<RawPhase>,
    #[serde(default)]
    scheme: Vec<RawScheme>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGen {
    n_securities: Option<usize>,
    n_orders: Option<usize>,
    start: Option<String>,
    end: Option<String>,
    spread_step_down: Option<Vec<f64>>,
    trade_size_step_down: Option<f64>,
    volume_drift: Option<f64>,
    price_vol: Option<f64>,
    spread_noise: Option<f64>,
    trade_noise: Option<f64>,
    volume_noise: Option<f64>,
    max_fills: Option<u32>,
    mi_base_bps: Option<f64>,
    mi_noise_bps: Option<f64>,
    mt_noise_bps: Option<f64>,
    top_bucket_effect_bps: Option<f64>,
    top_bucket_from: Option<String>,
    top_bucket_min_mm: Option<f64>,
    outlier_date: Option<String>,
    outlier_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTca {
    mode: Option<String>,
    negate: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMie {
    sizes: Option<Vec<u64>>,
    lookback_days: Option<usize>,
    intervals: Option<u32>,
    participation_rate: Option<f64>,
    style: Option<String>,
    start_frac: Option<f64>,
    end_frac: Option<f64>,
    n_paths: Option<u32>,
    calibration_orders: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBirdseye {
    min_before_spread: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeepdive {
    vol_window: Option<usize>,
    trend_end: Option<String>,
    differencing: Option<String>,
    threshold: Option<f64>,
    policy_sample: Option<String>,
    demean: Option<bool>,
    interactions: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBuckets {
    liquidity: Option<Vec<f64>>,
    notional_a: Option<Vec<f64>>,
    notional_b: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    label: String,
    start: String,
    end: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhase {
    label: String,
    ex_date: String,
    rule: String,
    threshold: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    phase: String,
    label: String,
    before: String,
    after: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Differencing {
    /// Driven by the ADF screen in `policy_sample`.
    Screen,
    /// Price, inverse price and FX only.
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MieConfig {
    pub sizes: Vec<u64>,
    pub lookback_days: usize,
    pub intervals: u32,
    pub params: SimParams,
    pub calibration_orders: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepdiveConfig {
    pub vol_window: usize,
    pub trend_end: Date,
    pub differencing: Differencing,
    pub threshold: f64,
    /// Sample whose ADF screen decides the differencing.
    pub policy_sample: SampleLabel,
    pub demean: bool,
    pub interactions: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub synth: SynthConfig,
    pub mi_mode: MiMode,
    pub negate: bool,
    pub mie: MieConfig,
    pub min_before_spread: Option<f64>,
    pub deepdive: DeepdiveConfig,
    pub liquidity: BucketScheme,
    pub notional_a: BucketScheme,
    pub notional_b: BucketScheme,
    pub windows: Vec<SampleWindow>,
    pub phases: Vec<EventPhase>,
    pub schemes: Vec<(PhaseLabel, ComparisonScheme)>,
}

/// Values given on the command line; each wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn date(key: &str, s: &str) -> Result<Date> {
    s.parse().map_err(|e| invalid(format!("{key}: {e}")))
}

fn buckets(key: &str, edges: Option<Vec<f64>>, default: BucketScheme, unit: &str) -> Result<BucketScheme> {
    match edges {
        None => Ok(default),
        Some(e) => BucketScheme::new(e, unit).map_err(|e| invalid(format!("buckets.{key}: {e}"))),
    }
}

fn phase_label(s: &str) -> Result<PhaseLabel> {
    match s.to_ascii_lowercase().as_str() {
        "phase1" => Ok(PhaseLabel::Phase1),
        "phase2" => Ok(PhaseLabel::Phase2),
        _ => Err(invalid(format!("unknown phase {s:?}"))),
    }
}

fn scheme_label(s: &str) -> Result<SchemeLabel> {
    SchemeLabel::ALL
        .into_iter()
        .find(|l| l.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| invalid(format!("unknown comparison scheme {s:?}")))
}

impl RunConfig {
    /// Reads `path` if given, applies `flags`, and validates.
    pub fn load(path: Option<&Path>, flags: &Overrides) -> Result<RunConfig> {
        let raw: RawConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
            }
            None => RawConfig::default(),
        };
        RunConfig::resolve(raw, flags)
    }

    pub fn from_toml(text: &str, flags: &Overrides) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        RunConfig::resolve(raw, flags)
    }

    fn resolve(raw: RawConfig, flags: &Overrides) -> Result<RunConfig> {
        let seed = flags.seed.or(raw.run.seed).unwrap_or(42);
        let data = flags.data.clone().or(raw.run.data).unwrap_or_else(|| PathBuf::from("data"));
        let out = flags.out.clone().or(raw.run.out).unwrap_or_else(|| PathBuf::from("out"));

        let mut phases: Vec<EventPhase> = default_phases().to_vec();
        for p in &raw.phase {
            let label = phase_label(&p.label)?;
            let rule = match p.rule.to_ascii_lowercase().as_str() {
                "above" => PriceRule::Above(p.threshold),
                "below" => PriceRule::Below(p.threshold),
                other => return Err(invalid(format!("phase.rule must be above or below, got {other:?}"))),
            };
            let ex_date = date("phase.ex_date", &p.ex_date)?;
            let slot = phases.iter_mut().find(|x| x.label == label).expect("both phases present");
            *slot = EventPhase { label, ex_date, rule };
        }
        let mut schemes: Vec<(PhaseLabel, ComparisonScheme)> =
            phases.iter().flat_map(|p| default_schemes(p.label).into_iter().map(move |s| (p.label, s))).collect();
        for s in &raw.scheme {
            let phase = phase_label(&s.phase)?;
            let label = scheme_label(&s.label)?;
            let before = date("scheme.before", &s.before)?;
            let after = date("scheme.after", &s.after)?;
            if before >= after {
                return Err(invalid(format!("scheme {label}: before {before} must precede after {after}")));
            }
            let slot = schemes.iter_mut().find(|(p, x)| *p == phase && x.label == label).expect("all schemes present");
            slot.1 = ComparisonScheme { label, before, after };
        }

        let mut windows: Vec<SampleWindow> = default_windows().to_vec();
        for s in &raw.sample {
            let label: SampleLabel = s.label.parse().map_err(|e| invalid(format!("sample.label: {e}")))?;
            let w = SampleWindow::new(label, date("sample.start", &s.start)?, date("sample.end", &s.end)?)
                .map_err(|e| invalid(format!("sample {label}: {e}")))?;
            *windows.iter_mut().find(|x| x.label == label).expect("all samples present") = w;
        }

        let g = raw.gen;
        let mut synth = SynthConfig { seed, phases: phases.clone(), ..SynthConfig::default() };
        if let Some(v) = g.n_securities {
            synth.n_securities = v;
        }
        if let Some(v) = g.n_orders {
            synth.n_orders = v;
        }
        if let Some(v) = g.start {
            synth.start = date("gen.start", &v)?;
        }
        if let Some(v) = g.end {
            synth.end = date("gen.end", &v)?;
        }
        if let Some(v) = g.spread_step_down {
            synth.spread_step_down = v;
        }
        let floats = [
            (g.trade_size_step_down, &mut synth.trade_size_step_down),
            (g.volume_drift, &mut synth.volume_drift),
            (g.price_vol, &mut synth.price_vol),
            (g.spread_noise, &mut synth.spread_noise),
            (g.trade_noise, &mut synth.trade_noise),
            (g.volume_noise, &mut synth.volume_noise),
            (g.mi_base_bps, &mut synth.cost.base_bps),
            (g.mi_noise_bps, &mut synth.cost.mi_noise_bps),
            (g.mt_noise_bps, &mut synth.cost.mt_noise_bps),
        ];
        for (v, slot) in floats {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(v) = g.max_fills {
            synth.max_fills = v;
        }
        let mut effect: PeriodEffect = synth.cost.period_effects[0];
        if let Some(v) = g.top_bucket_effect_bps {
            effect.bps = v;
        }
        if let Some(v) = g.top_bucket_from {
            effect.from = date("gen.top_bucket_from", &v)?;
        }
        if let Some(v) = g.top_bucket_min_mm {
            effect.min_notional_mm = v;
        }
        synth.cost.period_effects = vec![effect];
        if let Some(d) = g.outlier_date {
            let factor = g.outlier_factor.unwrap_or(1.6);
            synth.outlier = Some((date("gen.outlier_date", &d)?, factor));
        } else if let Some(f) = g.outlier_factor {
            synth.outlier = synth.outlier.map(|(d, _)| (d, f));
        }
        synth.splits.retain(|s| s.security < synth.n_securities && s.ex_date >= synth.start && s.ex_date <= synth.end);
        if synth.start > phases.iter().map(|p| p.ex_date).min().unwrap_or(synth.start)
            || synth.end < phases.iter().map(|p| p.ex_date).max().unwrap_or(synth.end)
        {
            // A shortened range drops the events it no longer contains.
            let keep: Vec<usize> = (0..synth.phases.len())
                .filter(|&i| synth.phases[i].ex_date >= synth.start && synth.phases[i].ex_date <= synth.end)
                .collect();
            synth.phases = keep.iter().map(|&i| synth.phases[i]).collect();
            synth.spread_step_down = keep.iter().filter_map(|&i| synth.spread_step_down.get(i).copied()).collect();
        }
        if synth.outlier.is_some_and(|(d, _)| d < synth.start || d > synth.end) {
            synth.outlier = None;
        }
        synth.validate().map_err(|e| invalid(e.to_string()))?;

        let mi_mode = match raw.tca.mode.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("standard") => MiMode::Standard,
            Some("net-new-levels") => MiMode::NetNewLevels,
            Some(other) => return Err(invalid(format!("tca.mode must be standard or net-new-levels, got {other:?}"))),
        };

        let m = raw.mie;
        let defaults = SimParams::default();
        let params = SimParams {
            participation_rate: m.participation_rate.unwrap_or(defaults.participation_rate),
            style: match m.style {
                Some(s) => s.parse::<TradingStyle>().map_err(|e| invalid(format!("mie.style: {e}")))?,
                None => defaults.style,
            },
            start_frac: m.start_frac.unwrap_or(defaults.start_frac),
            end_frac: m.end_frac.unwrap_or(defaults.end_frac),
            n_paths: m.n_paths.unwrap_or(defaults.n_paths),
            seed,
        };
        params.validate().map_err(|e| invalid(format!("mie: {e}")))?;
        let mie = MieConfig {
            sizes: m.sizes.unwrap_or_else(|| vec![0, 10_000, 100_000]),
            lookback_days: m.lookback_days.unwrap_or(20),
            intervals: m.intervals.unwrap_or(DEFAULT_INTERVALS),
            params,
            calibration_orders: m.calibration_orders.unwrap_or(20),
        };
        if mie.lookback_days < 2 || mie.intervals == 0 {
            return Err(invalid("mie.lookback_days must be at least 2 and mie.intervals positive"));
        }

        let d = raw.deepdive;
        let deepdive = DeepdiveConfig {
            vol_window: d.vol_window.unwrap_or(VOL_WINDOW),
            trend_end: match d.trend_end {
                Some(s) => date("deepdive.trend_end", &s)?,
                None => Date::ymd(2014, 10, 30),
            },
            differencing: match d.differencing.as_deref() {
                None | Some("screen") => Differencing::Screen,
                Some("default") => Differencing::Default,
                Some(other) => {
                    return Err(invalid(format!("deepdive.differencing must be screen or default, got {other:?}")))
                }
            },
            threshold: d.threshold.unwrap_or(0.5),
            policy_sample: match d.policy_sample {
                Some(s) => s.parse().map_err(|e| invalid(format!("deepdive.policy_sample: {e}")))?,
                None => SampleLabel::S1,
            },
            demean: d.demean.unwrap_or(false),
            interactions: d.interactions.unwrap_or(false),
        };
        if deepdive.vol_window < 2 || !(0.0..=1.0).contains(&deepdive.threshold) {
            return Err(invalid("deepdive.vol_window must be at least 2 and threshold within [0, 1]"));
        }

        if let Some(v) = raw.birdseye.min_before_spread {
            if v.is_nan() || v < 0.0 {
                return Err(invalid("birdseye.min_before_spread must be non-negative"));
            }
        }

        Ok(RunConfig {
            data,
            out,
            seed,
            synth,
            mi_mode,
            negate: raw.tca.negate.unwrap_or(false),
            mie,
            min_before_spread: raw.birdseye.min_before_spread,
            deepdive,
            liquidity: buckets("liquidity", raw.buckets.liquidity, BucketScheme::liquidity_default(), "%")?,
            notional_a: buckets("notional_a", raw.buckets.notional_a, BucketScheme::notional_a(), "MM")?,
            notional_b: buckets("notional_b", raw.buckets.notional_b, BucketScheme::notional_b(), "MM")?,
            windows,
            phases,
            schemes,
        })
    }
}
