//! K-modes clustering for categorical records.
//!
//! Records are grouped by simple-matching dissimilarity (count of differing
//! positions); each cluster is represented by its per-column mode vector.
//! Iteration alternates assignment and mode updates until no row moves or the
//! iteration cap is reached. All tie-breaking rules are fixed so fits are
//! deterministic across platforms: nearest-mode ties go to the lowest cluster
//! id, mode ties to the lowest category index, and an emptied cluster is
//! refilled by the row farthest from its current mode (lowest row id on ties).

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::CategoricalTable;
use crate::error::{Error, Result};
use crate::rng::{seed_for, Prng, SeedableRng};

/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100;

/// Fitted k-modes model.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    k: usize,
    modes: Vec<Vec<usize>>,
    assignments: Vec<usize>,
    cost_trace: Vec<u64>,
    moves_trace: Vec<usize>,
    iterations_run: usize,
    seed: u64,
    column_names: Vec<String>,
    vocabularies: Vec<Vec<String>>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Mode vectors, one per cluster, as category indices per feature.
    pub fn modes(&self) -> &[Vec<usize>] {
        &self.modes
    }

    /// Training-row cluster ids.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Total dissimilarity after each iteration's mode update; non-increasing.
    pub fn cost_trace(&self) -> &[u64] {
        &self.cost_trace
    }

    /// Rows reassigned in each iteration; 0 in the final iteration unless the
    /// cap was hit.
    pub fn moves_trace(&self) -> &[usize] {
        &self.moves_trace
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn final_cost(&self) -> u64 {
        *self
            .cost_trace
            .last()
            .expect("fit runs at least one iteration")
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn vocabularies(&self) -> &[Vec<String>] {
        &self.vocabularies
    }
}

/// Simple-matching dissimilarity: the number of differing positions.
pub fn dissimilarity(a: &[usize], b: &[usize]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

fn mismatches(row: &[usize], mode: &[usize]) -> usize {
    row.iter().zip(mode).filter(|(x, y)| x != y).count()
}

fn nearest_mode(row: &[usize], modes: &[Vec<usize>]) -> usize {
    let mut best = 0usize;
    let mut best_d = usize::MAX;
    for (c, mode) in modes.iter().enumerate() {
        let d = mismatches(row, mode);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Fits k modes to the table.
///
/// Initial modes are `k` distinct rows (by content) drawn uniformly at random
/// from the seeded generator. Iteration stops when an assignment pass moves no
/// rows, or after `max_iter` passes.
pub fn fit(table: &CategoricalTable, k: usize, seed: u64, max_iter: usize) -> Result<ClusterModel> {
    if k < 1 {
        return Err(Error::Argument("k must be at least 1".to_string()));
    }
    if max_iter < 1 {
        return Err(Error::Argument("max_iter must be at least 1".to_string()));
    }
    if table.has_missing() {
        return Err(Error::State(
            "table has missing cells; impute before clustering".to_string(),
        ));
    }
    let n = table.row_count();
    let cols = table.column_count();
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|r| {
            table
                .row(r)
                .iter()
                .map(|c| c.expect("no missing cells"))
                .collect()
        })
        .collect();

    let mut seen = HashSet::new();
    let mut distinct: Vec<&Vec<usize>> = Vec::new();
    for row in &rows {
        if seen.insert(row.as_slice()) {
            distinct.push(row);
        }
    }
    if k > distinct.len() {
        return Err(Error::Init(format!(
            "k = {k} exceeds the {} distinct rows available",
            distinct.len()
        )));
    }

    let mut rng = Prng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, distinct.len(), k);
    let mut modes: Vec<Vec<usize>> = chosen.iter().map(|i| distinct[i].clone()).collect();

    let mut assignments = vec![usize::MAX; n];
    let mut cost_trace = Vec::new();
    let mut moves_trace = Vec::new();
    let mut iterations_run = 0usize;

    for _ in 0..max_iter {
        iterations_run += 1;

        // (a) assign each row to its nearest mode.
        let mut moves = 0usize;
        for (i, row) in rows.iter().enumerate() {
            let best = nearest_mode(row, &modes);
            if assignments[i] != best {
                assignments[i] = best;
                moves += 1;
            }
        }

        // Refill emptied clusters with the farthest row from its current mode.
        let mut sizes = vec![0usize; k];
        for &a in &assignments {
            sizes[a] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let mut donor: Option<usize> = None;
            let mut donor_d = 0usize;
            for (i, row) in rows.iter().enumerate() {
                if sizes[assignments[i]] < 2 {
                    continue;
                }
                let d = mismatches(row, &modes[assignments[i]]);
                if donor.is_none() || d > donor_d {
                    donor = Some(i);
                    donor_d = d;
                }
            }
            let i = donor.expect("some cluster holds at least two rows");
            sizes[assignments[i]] -= 1;
            assignments[i] = c;
            sizes[c] += 1;
            moves += 1;
        }

        // (b) recompute each mode column-wise as the cluster's most frequent
        // category, ties to the lowest category index.
        let mut counts: Vec<Vec<Vec<usize>>> = (0..k)
            .map(|_| {
                (0..cols)
                    .map(|j| vec![0usize; table.vocabulary(j).len()])
                    .collect()
            })
            .collect();
        for (row, &a) in rows.iter().zip(&assignments) {
            for (j, &v) in row.iter().enumerate() {
                counts[a][j][v] += 1;
            }
        }
        for c in 0..k {
            for j in 0..cols {
                let mode = counts[c][j]
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)))
                    .map(|(v, _)| v)
                    .expect("cluster is non-empty");
                modes[c][j] = mode;
            }
        }

        // (c) record cost and moves.
        let cost: u64 = rows
            .iter()
            .zip(&assignments)
            .map(|(row, &a)| mismatches(row, &modes[a]) as u64)
            .sum();
        if let Some(&prev) = cost_trace.last() {
            debug_assert!(cost <= prev, "k-modes cost must be non-increasing");
        }
        cost_trace.push(cost);
        moves_trace.push(moves);

        if moves == 0 {
            break;
        }
    }

    Ok(ClusterModel {
        k,
        modes,
        assignments,
        cost_trace,
        moves_trace,
        iterations_run,
        seed,
        column_names: table.column_names().to_vec(),
        vocabularies: table.vocabularies().to_vec(),
    })
}

/// Runs [`fit`] `restarts` times with derived seeds and keeps the lowest-cost
/// model (earliest restart wins ties).
pub fn fit_with_restarts(
    table: &CategoricalTable,
    k: usize,
    seed: u64,
    max_iter: usize,
    restarts: usize,
) -> Result<ClusterModel> {
    if restarts < 1 {
        return Err(Error::Argument("restarts must be at least 1".to_string()));
    }
    let mut best: Option<ClusterModel> = None;
    for i in 0..restarts {
        let attempt_seed = if restarts == 1 {
            seed
        } else {
            seed_for(seed, &format!("kmodes/restart/{i}"))
        };
        let model = fit(table, k, attempt_seed, max_iter)?;
        if best
            .as_ref()
            .is_none_or(|b| model.final_cost() < b.final_cost())
        {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Assigns a row to its nearest mode; ties go to the lowest cluster id.
///
/// Cells that are `None` (unseen or missing categories) mismatch every mode.
pub fn predict(model: &ClusterModel, row: &[Option<usize>]) -> Result<usize> {
    let cols = model.column_names.len();
    if row.len() != cols {
        return Err(Error::Argument(format!(
            "row has {} cells, model expects {cols}",
            row.len()
        )));
    }
    let mut best = 0usize;
    let mut best_d = usize::MAX;
    for (c, mode) in model.modes.iter().enumerate() {
        let d = row
            .iter()
            .zip(mode)
            .filter(|(cell, m)| cell.as_ref() != Some(m))
            .count();
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    Ok(best)
}

/// One named cluster: its majority label and the majority fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCluster {
    pub label: String,
    pub purity: f64,
}

/// Cluster-to-label mapping derived by majority vote.
#[derive(Debug, Clone)]
pub struct ClusterNaming {
    /// Indexed by cluster id; `None` marks an empty cluster (see `warnings`).
    pub clusters: Vec<Option<NamedCluster>>,
    pub warnings: Vec<String>,
}

/// Names each cluster after the majority label among its training rows.
///
/// Ties go to the lexicographically smallest label name. Empty clusters are
/// excluded from the mapping and reported as warnings.
pub fn name_clusters(
    model: &ClusterModel,
    labels: &[usize],
    label_names: &[String],
) -> Result<ClusterNaming> {
    if labels.len() != model.assignments.len() {
        return Err(Error::Argument(format!(
            "{} labels for {} clustered rows",
            labels.len(),
            model.assignments.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
        return Err(Error::Argument(format!("label index {bad} out of range")));
    }
    let mut counts = vec![vec![0usize; label_names.len()]; model.k];
    for (&a, &l) in model.assignments.iter().zip(labels) {
        counts[a][l] += 1;
    }
    let mut clusters = Vec::with_capacity(model.k);
    let mut warnings = Vec::new();
    for (c, class_counts) in counts.iter().enumerate() {
        let size: usize = class_counts.iter().sum();
        if size == 0 {
            warnings.push(format!("cluster {c} is empty and was excluded"));
            clusters.push(None);
            continue;
        }
        let mut best = 0usize;
        for l in 1..label_names.len() {
            let better = class_counts[l] > class_counts[best]
                || (class_counts[l] == class_counts[best] && label_names[l] < label_names[best]);
            if better {
                best = l;
            }
        }
        clusters.push(Some(NamedCluster {
            label: label_names[best].clone(),
            purity: class_counts[best] as f64 / size as f64,
        }));
    }
    Ok(ClusterNaming { clusters, warnings })
}

#[derive(Serialize, Deserialize)]
struct KmodesPortable {
    format_version: u32,
    model_type: String,
    k: usize,
    seed: u64,
    iterations_run: usize,
    cost_trace: Vec<u64>,
    column_names: Vec<String>,
    vocabularies: BTreeMap<String, Vec<String>>,
    /// Mode vectors as category strings, aligned with `column_names`.
    modes: Vec<Vec<String>>,
}

pub const KMODES_FORMAT_VERSION: u32 = 1;

impl ClusterModel {
    /// Serializes the model as JSON with modes spelled as category strings.
    pub fn to_json(&self) -> Result<String> {
        let portable = KmodesPortable {
            format_version: KMODES_FORMAT_VERSION,
            model_type: "kmodes".to_string(),
            k: self.k,
            seed: self.seed,
            iterations_run: self.iterations_run,
            cost_trace: self.cost_trace.clone(),
            column_names: self.column_names.clone(),
            vocabularies: self
                .column_names
                .iter()
                .cloned()
                .zip(self.vocabularies.iter().cloned())
                .collect(),
            modes: self
                .modes
                .iter()
                .map(|m| {
                    m.iter()
                        .enumerate()
                        .map(|(j, &v)| self.vocabularies[j][v].clone())
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&portable)?)
    }

    /// Restores a model serialized by [`ClusterModel::to_json`].
    pub fn from_json(text: &str) -> Result<ClusterModel> {
        let portable: KmodesPortable = serde_json::from_str(text)?;
        if portable.format_version != KMODES_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported kmodes format version {}",
                portable.format_version
            )));
        }
        if portable.model_type != "kmodes" {
            return Err(Error::Format(format!(
                "expected model_type 'kmodes', found '{}'",
                portable.model_type
            )));
        }
        let vocabularies: Vec<Vec<String>> =
            portable
                .column_names
                .iter()
                .map(|name| {
                    portable.vocabularies.get(name).cloned().ok_or_else(|| {
                        Error::Format(format!("missing vocabulary for column '{name}'"))
                    })
                })
                .collect::<Result<_>>()?;
        let modes: Vec<Vec<usize>> = portable
            .modes
            .iter()
            .map(|m| {
                if m.len() != portable.column_names.len() {
                    return Err(Error::Format("mode length mismatch".to_string()));
                }
                m.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        vocabularies[j].iter().position(|x| x == v).ok_or_else(|| {
                            Error::Format(format!("mode category '{v}' not in vocabulary"))
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        if modes.len() != portable.k {
            return Err(Error::Format("mode count differs from k".to_string()));
        }
        Ok(ClusterModel {
            k: portable.k,
            modes,
            assignments: Vec::new(),
            cost_trace: portable.cost_trace,
            moves_trace: Vec::new(),
            iterations_run: portable.iterations_run,
            seed: portable.seed,
            column_names: portable.column_names,
            vocabularies,
        })
    }
}
