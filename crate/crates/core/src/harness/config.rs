//! Study configuration read from `key = value` text.

use super::problems::{ErrorNorm, Manufactured, Problem, ProblemModel, ReactionDiffusion1d};
use super::HarnessError;
use crate::config::KeyValues;
use crate::integrators::Scheme;
use crate::phipm::EngineSettings;
use crate::swe::{Scenario, ShallowWater, SCENARIO_KEYS};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemId {
    Manufactured,
    ReactionDiffusion1d,
    SwePlanar,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Manufactured => "manufactured",
            ProblemId::ReactionDiffusion1d => "reaction_diffusion_1d",
            ProblemId::SwePlanar => "swe_planar",
        }
    }
}

impl FromStr for ProblemId {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "manufactured" => Ok(ProblemId::Manufactured),
            "reaction_diffusion_1d" => Ok(ProblemId::ReactionDiffusion1d),
            "swe_planar" => Ok(ProblemId::SwePlanar),
            _ => Err(HarnessError::Invalid(format!("unknown problem '{s}'"))),
        }
    }
}

/// Where errors are measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferencePolicy {
    /// Exact solution when the problem has one, otherwise computed.
    Auto,
    Exact,
    Computed,
}

impl FromStr for ReferencePolicy {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ReferencePolicy::Auto),
            "exact" => Ok(ReferencePolicy::Exact),
            "computed" => Ok(ReferencePolicy::Computed),
            _ => Err(HarnessError::Invalid(format!("unknown reference policy '{s}'"))),
        }
    }
}

const STUDY_KEYS: [&str; 18] = [
    "problem",
    "schemes",
    "dts",
    "t_end",
    "tol",
    "out",
    "reference",
    "cache_dir",
    "seed",
    "error_floor",
    "thresholds",
    "baseline",
    "zero_skip",
    "components",
    "lambda_min",
    "lambda_max",
    "cells",
    "epsilon",
];

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub problem: ProblemId,
    pub schemes: Vec<Scheme>,
    /// Shared step sizes, positive and descending.
    pub dts: Vec<f64>,
    /// Per-scheme overrides from `dts.<scheme>` keys.
    pub scheme_dts: BTreeMap<Scheme, Vec<f64>>,
    pub t_end: f64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub reference: ReferencePolicy,
    pub cache_dir: PathBuf,
    pub seed: u64,
    /// Rows with error at or below this are excluded from order fits.
    pub error_floor: f64,
    pub thresholds: Vec<f64>,
    pub baseline: Scheme,
    pub zero_skip: bool,
    pub components: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub cells: usize,
    pub epsilon: f64,
    pub scenario: Scenario,
    raw: KeyValues,
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        Self::from_values(KeyValues::parse(text)?)
    }

    pub fn from_values(kv: KeyValues) -> Result<Self, HarnessError> {
        let mut known: Vec<String> = STUDY_KEYS.iter().chain(&SCENARIO_KEYS).map(|s| s.to_string()).collect();
        known.extend(Scheme::ALL.iter().map(|s| format!("dts.{}", s.name())));
        let known: Vec<&str> = known.iter().map(String::as_str).collect();
        kv.check_known(&known)?;

        let problem: ProblemId = kv.require::<String>("problem")?.parse()?;
        let schemes = match kv.get_list::<String>("schemes")? {
            Some(names) => names.iter().map(|n| n.parse::<Scheme>().map_err(HarnessError::Invalid)).collect::<Result<_, _>>()?,
            None => Scheme::ALL.to_vec(),
        };
        let scenario = Scenario::from_config(&kv)?;
        let default_t_end = match problem {
            ProblemId::SwePlanar => scenario.dt * scenario.steps as f64,
            _ => 1.0,
        };
        let dts = match kv.get_list::<f64>("dts")? {
            Some(d) => d,
            None if problem == ProblemId::SwePlanar => vec![scenario.dt],
            None => return Err(HarnessError::Invalid("missing 'dts'".into())),
        };
        let mut scheme_dts = BTreeMap::new();
        for s in Scheme::ALL {
            if let Some(d) = kv.get_list::<f64>(&format!("dts.{}", s.name()))? {
                scheme_dts.insert(s, d);
            }
        }
        let tol = kv.get_or("tol", 1e-10)?;
        let cfg = Self {
            problem,
            schemes,
            dts,
            scheme_dts,
            t_end: kv.get_or("t_end", default_t_end)?,
            tol,
            out: kv.get::<String>("out")?.map(PathBuf::from),
            reference: kv.get_or::<String>("reference", "auto".into())?.parse()?,
            cache_dir: PathBuf::from(kv.get_or::<String>("cache_dir", ".expint-cache".into())?),
            seed: kv.get_or("seed", 0)?,
            error_floor: kv.get_or("error_floor", 10.0 * tol)?,
            thresholds: kv.get_list("thresholds")?.unwrap_or_else(|| vec![1e-7]),
            baseline: kv.get_or::<String>("baseline", "epi3".into())?.parse().map_err(HarnessError::Invalid)?,
            zero_skip: kv.get_or("zero_skip", true)?,
            components: kv.get_or("components", 8)?,
            lambda_min: kv.get_or("lambda_min", -1e3)?,
            lambda_max: kv.get_or("lambda_max", -1.0)?,
            cells: kv.get_or("cells", 512)?,
            epsilon: kv.get_or("epsilon", 1e-2)?,
            scenario,
            raw: kv,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        for (name, d) in std::iter::once(("dts".to_string(), &self.dts)).chain(self.scheme_dts.iter().map(|(s, d)| (format!("dts.{}", s.name()), d))) {
            if d.is_empty() || d.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return bad(format!("'{name}' must hold positive step sizes"));
            }
            if d.windows(2).any(|w| w[1] >= w[0]) {
                return bad(format!("'{name}' must be strictly descending"));
            }
        }
        if self.schemes.is_empty() {
            return bad("no schemes selected".into());
        }
        if !(self.t_end > 0.0) || !(self.tol > 0.0) {
            return bad("t_end and tol must be positive".into());
        }
        if self.components == 0 || self.cells < 3 || !(self.epsilon >= 0.0) {
            return bad("components, cells or epsilon out of range".into());
        }
        if !(self.lambda_min < 0.0 && self.lambda_max < 0.0) {
            return bad("lambda range must be negative".into());
        }
        Ok(())
    }

    /// Step sizes used for `scheme`.
    pub fn dts_for(&self, scheme: Scheme) -> &[f64] {
        self.scheme_dts.get(&scheme).unwrap_or(&self.dts)
    }

    pub fn min_dt(&self) -> f64 {
        self.schemes.iter().flat_map(|&s| self.dts_for(s).iter().copied()).fold(f64::INFINITY, f64::min)
    }

    pub fn engine_settings(&self) -> EngineSettings {
        let mut s = EngineSettings::default().with_tol(self.tol);
        s.zero_skip = self.zero_skip;
        s
    }

    /// Applies command-line overrides.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<(), HarnessError> {
        let mut kv = self.raw.clone();
        kv.set(key, value);
        *self = Self::from_values(kv)?;
        Ok(())
    }

    pub fn values(&self) -> &KeyValues {
        &self.raw
    }

    /// Canonical text of the keys that determine the problem and its
    /// trajectory, independent of schemes, outputs and study knobs.
    pub fn problem_fingerprint(&self) -> String {
        let study_only = ["schemes", "dts", "out", "reference", "cache_dir", "error_floor", "thresholds", "baseline", "zero_skip", "tol"];
        let mut kv = KeyValues::default();
        for (k, v) in self.raw.iter() {
            if !study_only.contains(&k) && !k.starts_with("dts.") {
                kv.set(k, v);
            }
        }
        kv.set("t_end", self.t_end);
        kv.canonical()
    }

    pub fn build_problem(&self) -> Result<Problem, HarnessError> {
        Ok(match self.problem {
            ProblemId::Manufactured => {
                let m = Manufactured::new(self.components, self.lambda_min, self.lambda_max, self.seed);
                let u0 = m.initial_state();
                Problem { model: ProblemModel::Manufactured(m), u0, norm: ErrorNorm::Full }
            }
            ProblemId::ReactionDiffusion1d => {
                let m = ReactionDiffusion1d::new(self.cells, self.epsilon);
                let u0 = m.initial_state();
                Problem { model: ProblemModel::ReactionDiffusion(m), u0, norm: ErrorNorm::Full }
            }
            ProblemId::SwePlanar => {
                let s = self.scenario.clone();
                let ops = s.operators()?;
                let u0 = s.initial_state(&ops);
                let c = ops.cells();
                Problem { model: ProblemModel::ShallowWater(Box::new(ShallowWater::new(ops)), s), u0, norm: ErrorNorm::Range(3 * c, 4 * c) }
            }
        })
    }
}
