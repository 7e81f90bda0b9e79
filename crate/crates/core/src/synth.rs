//! Seeded generator of categorical datasets with planted class structure.
//!
//! Each class owns a preferred category per informative feature. An
//! informative cell equals its class preference with probability `signal`,
//! otherwise it is uniform over the feature's categories; non-informative
//! cells are always uniform. At `signal = 0` every feature is independent of
//! the label by construction; at `signal = 1` informative cells are
//! deterministic. Independent ChaCha8 streams drive labels, preferences,
//! cells, and missingness, so the same `(spec, seed)` pair always yields a
//! bit-identical table.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{CategoricalTable, Cell, LabelColumn};
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// The seven dosha classes: three pure types, three pairwise overlaps, and the
/// triple overlap.
pub const DOSHA_CLASSES: [&str; 7] = [
    "Vata",
    "Pita",
    "Kapha",
    "Vata-Kapha",
    "Vata-Pita",
    "Pita-Kapha",
    "Vata-Pita-Kapha",
];

/// Category counts per feature: one shared size or a per-feature list.
#[derive(Debug, Clone)]
pub enum CategoryCounts {
    Uniform(usize),
    PerFeature(Vec<usize>),
}

impl CategoryCounts {
    fn for_feature(&self, feature: usize) -> usize {
        match self {
            CategoryCounts::Uniform(n) => *n,
            CategoryCounts::PerFeature(v) => v[feature],
        }
    }
}

/// Shape and signal parameters of a generated dataset.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub rows: usize,
    pub features: usize,
    pub categories_per_feature: CategoryCounts,
    /// The first `informative_features` columns carry class signal.
    pub informative_features: usize,
    /// Probability that an informative cell equals its class preference.
    pub signal: f64,
    pub missing_rate: f64,
    pub class_names: Vec<String>,
    pub class_balance: Vec<f64>,
    pub label_column: String,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            rows: 0,
            features: 147,
            categories_per_feature: CategoryCounts::Uniform(3),
            informative_features: 20,
            signal: 0.9,
            missing_rate: 0.0,
            class_names: DOSHA_CLASSES.iter().map(|s| s.to_string()).collect(),
            class_balance: vec![1.0 / 7.0; 7],
            label_column: "dosha".to_string(),
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.informative_features > self.features {
            return Err(Error::Argument(format!(
                "{} informative features exceed {} features",
                self.informative_features, self.features
            )));
        }
        if !(0.0..=1.0).contains(&self.signal) {
            return Err(Error::Argument(format!(
                "signal must be in [0, 1], got {}",
                self.signal
            )));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::Argument(format!(
                "missing rate must be in [0, 1), got {}",
                self.missing_rate
            )));
        }
        if self.class_names.is_empty() {
            return Err(Error::Argument(
                "at least one class is required".to_string(),
            ));
        }
        if self.class_balance.len() != self.class_names.len() {
            return Err(Error::Argument(format!(
                "{} balance entries for {} classes",
                self.class_balance.len(),
                self.class_names.len()
            )));
        }
        if self.class_balance.iter().any(|&p| p < 0.0) {
            return Err(Error::Argument(
                "class proportions must be non-negative".to_string(),
            ));
        }
        let total: f64 = self.class_balance.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "class proportions must sum to 1, got {total}"
            )));
        }
        if let CategoryCounts::PerFeature(v) = &self.categories_per_feature {
            if v.len() != self.features {
                return Err(Error::Argument(format!(
                    "{} category counts for {} features",
                    v.len(),
                    self.features
                )));
            }
        }
        for f in 0..self.features {
            if self.categories_per_feature.for_feature(f) == 0 {
                return Err(Error::Argument(format!(
                    "feature {f} must have at least one category"
                )));
            }
        }
        Ok(())
    }
}

/// The planted structure behind a generated table; the labeling oracle for
/// verification.
#[derive(Debug, Clone)]
pub struct PlantedPlan {
    /// Column indices that carry class signal.
    pub informative: Vec<usize>,
    /// `preferred[class][i]` is the preferred category of informative column
    /// `informative[i]` for that class.
    pub preferred: Vec<Vec<usize>>,
}

/// Generates a labeled table; see [`generate_with_plan`] for the oracle too.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<CategoricalTable> {
    generate_with_plan(spec, seed).map(|(table, _)| table)
}

/// Generates a labeled table along with its planted structure.
pub fn generate_with_plan(
    spec: &GeneratorSpec,
    seed: u64,
) -> Result<(CategoricalTable, PlantedPlan)> {
    spec.validate()?;
    let classes = spec.class_names.len();

    // Per-class row counts by largest remainder, ties to the lowest class.
    let mut counts: Vec<usize> = Vec::with_capacity(classes);
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(classes);
    for (c, &p) in spec.class_balance.iter().enumerate() {
        let target = spec.rows as f64 * p;
        counts.push(target.floor() as usize);
        remainders.push((target - target.floor(), c));
    }
    let mut leftover = spec.rows - counts.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, c) in &remainders {
        if leftover == 0 {
            break;
        }
        counts[c] += 1;
        leftover -= 1;
    }

    let mut labels: Vec<usize> = Vec::with_capacity(spec.rows);
    for (c, &n) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(c, n));
    }
    labels.shuffle(&mut rng_for(seed, "synth/labels"));

    // Class-preferred categories for the informative columns.
    let mut prefs_rng = rng_for(seed, "synth/prefs");
    let informative: Vec<usize> = (0..spec.informative_features).collect();
    let preferred: Vec<Vec<usize>> = (0..classes)
        .map(|_| {
            informative
                .iter()
                .map(|&f| prefs_rng.random_range(0..spec.categories_per_feature.for_feature(f)))
                .collect()
        })
        .collect();

    let mut cells_rng = rng_for(seed, "synth/cells");
    let mut cells: Vec<Cell> = Vec::with_capacity(spec.rows * spec.features);
    for &class in &labels {
        #[allow(clippy::needless_range_loop)]
        // f spans all features, preferred only the informative prefix
        for f in 0..spec.features {
            let k = spec.categories_per_feature.for_feature(f);
            let value = if f < spec.informative_features && cells_rng.random::<f64>() < spec.signal
            {
                preferred[class][f]
            } else {
                cells_rng.random_range(0..k)
            };
            cells.push(Some(value));
        }
    }

    // Missingness runs on its own stream so cells match across missing rates.
    if spec.missing_rate > 0.0 {
        let mut missing_rng = rng_for(seed, "synth/missing");
        for cell in cells.iter_mut() {
            if missing_rng.random::<f64>() < spec.missing_rate {
                *cell = None;
            }
        }
    }

    let width = spec.features.to_string().len();
    let column_names: Vec<String> = (0..spec.features)
        .map(|f| format!("f{:0width$}", f + 1))
        .collect();
    let vocabularies: Vec<Vec<String>> = (0..spec.features)
        .map(|f| {
            (0..spec.categories_per_feature.for_feature(f))
                .map(|v| format!("v{v}"))
                .collect()
        })
        .collect();

    let table = CategoricalTable::new(
        column_names,
        vocabularies,
        cells,
        Some(LabelColumn {
            name: spec.label_column.clone(),
            vocabulary: spec.class_names.clone(),
            values: labels,
        }),
        spec.rows,
    )?;
    Ok((
        table,
        PlantedPlan {
            informative,
            preferred,
        },
    ))
}
