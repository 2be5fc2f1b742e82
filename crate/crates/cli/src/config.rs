//! Tuning and grid files: plain `key=value` and whitespace-separated lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cluster_oracle::dot_oracle::ParamOverrides;
use cluster_oracle::eval::GridEntry;

/// Sampling parameters found by running the density-gap tuning on a
/// 3000-vertex, 3-cluster SBM with p = 0.03 and q = 0.002.
pub fn tuned_preset() -> ParamOverrides {
    ParamOverrides {
        t: Some(20),
        s_oracle: Some(60),
        r_init: Some(1000),
        r_query: Some(1000),
        reps: Some(5),
        ..Default::default()
    }
}

/// Default tuning grid: walk lengths around the preset.
pub fn default_grid() -> Vec<GridEntry> {
    [12, 20, 30]
        .into_iter()
        .map(|t| GridEntry {
            t,
            s_oracle: 60,
            r_init: 1000,
            r_query: 1000,
            reps: 5,
        })
        .collect()
}

/// Result of `tune`, also accepted by `preprocess --tuning`.
#[derive(Clone, Debug, PartialEq)]
pub struct TuningFile {
    pub entry: GridEntry,
    pub theta: f64,
    pub gap: f64,
    pub s: Option<usize>,
    pub seed: u64,
}

impl TuningFile {
    pub fn render(&self) -> String {
        let mut out = format!(
            "seed={}\nt={}\ns_oracle={}\nr_init={}\nr_query={}\nreps={}\ntheta={}\ngap={}\n",
            self.seed,
            self.entry.t,
            self.entry.s_oracle,
            self.entry.r_init,
            self.entry.r_query,
            self.entry.reps,
            self.theta,
            self.gap
        );
        if let Some(s) = self.s {
            out.push_str(&format!("s={s}\n"));
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let map = parse_key_values(&text)?;
        let get = |key: &str| map.get(key).ok_or_else(|| anyhow!("tuning file lacks `{key}`"));
        let num = |key: &str| -> Result<usize> { Ok(get(key)?.parse()?) };
        Ok(Self {
            entry: GridEntry {
                t: num("t")?,
                s_oracle: num("s_oracle")?,
                r_init: num("r_init")?,
                r_query: num("r_query")?,
                reps: num("reps")?,
            },
            theta: get("theta")?.parse()?,
            gap: get("gap")?.parse()?,
            s: map.get("s").map(|v| v.parse()).transpose()?,
            seed: get("seed")?.parse()?,
        })
    }

    pub fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            t: Some(self.entry.t),
            s: self.s,
            s_oracle: Some(self.entry.s_oracle),
            r_init: Some(self.entry.r_init),
            r_query: Some(self.entry.r_query),
            reps: Some(self.entry.reps),
            ..Default::default()
        }
    }
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value", i + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// One grid entry per line: `t s_oracle r_init r_query reps`; `#` starts a
/// comment.
pub fn read_grid(path: &Path) -> Result<Vec<GridEntry>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut grid = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("grid line {}", i + 1))?;
        let [t, s_oracle, r_init, r_query, reps] = fields[..] else {
            bail!("grid line {}: expected 5 fields", i + 1);
        };
        grid.push(GridEntry {
            t,
            s_oracle,
            r_init,
            r_query,
            reps,
        });
    }
    if grid.is_empty() {
        bail!("grid file {} has no entries", path.display());
    }
    Ok(grid)
}
