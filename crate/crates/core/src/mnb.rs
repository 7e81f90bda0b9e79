//! Multinomial naive Bayes over one-hot categorical events.
//!
//! Each categorical cell contributes exactly one count per row, so the
//! likelihood of category `v` for feature `f` given class `c` is the smoothed
//! ratio `(count(f=v, c) + alpha) / (count(c) + alpha * |vocab(f)|)`. All
//! parameters are stored in log space; the class-independent predictor prior
//! drops out of the scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::CategoricalTable;
use crate::error::{Error, Result};
use crate::num::{from_count, real, Real};

pub const MNB_FORMAT_VERSION: u32 = 1;

/// Fitted multinomial naive Bayes model.
#[derive(Debug, Clone)]
pub struct MnbModel<R: Real = f64> {
    class_names: Vec<String>,
    alpha: R,
    log_prior: Vec<R>,
    /// `[feature][category][class]` smoothed log conditional probabilities.
    log_likelihood: Vec<Vec<Vec<R>>>,
    /// `[feature][class]` smoothing floor for categories unseen at fit time.
    unseen_log_likelihood: Vec<Vec<R>>,
    column_names: Vec<String>,
    vocabularies: Vec<Vec<String>>,
}

/// Fits the model with Laplace smoothing `alpha > 0`.
pub fn fit<R: Real>(train: &CategoricalTable, alpha: R) -> Result<MnbModel<R>> {
    if alpha <= R::zero() {
        return Err(Error::Argument(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    fit_inner(train, alpha)
}

/// Fit without the alpha > 0 check; alpha = 0 is used by internal tests to
/// verify count ratios directly.
fn fit_inner<R: Real>(train: &CategoricalTable, alpha: R) -> Result<MnbModel<R>> {
    let labels = train
        .labels()
        .ok_or_else(|| Error::Argument("training table has no labels".to_string()))?;
    if train.row_count() == 0 {
        return Err(Error::Fit("empty training set".to_string()));
    }
    if train.has_missing() {
        return Err(Error::State(
            "table has missing cells; impute before fitting".to_string(),
        ));
    }
    let n = train.row_count();
    let classes = labels.vocabulary.len();
    let cols = train.column_count();

    let mut class_counts = vec![0usize; classes];
    for &c in &labels.values {
        class_counts[c] += 1;
    }

    let mut counts: Vec<Vec<Vec<usize>>> = (0..cols)
        .map(|f| vec![vec![0usize; classes]; train.vocabulary(f).len()])
        .collect();
    for r in 0..n {
        let c = labels.values[r];
        for (f, cell) in train.row(r).iter().enumerate() {
            counts[f][cell.expect("no missing cells")][c] += 1;
        }
    }

    let log_prior: Vec<R> = class_counts
        .iter()
        .map(|&cc| {
            ((from_count::<R>(cc) + alpha)
                / (from_count::<R>(n) + alpha * from_count::<R>(classes)))
            .ln()
        })
        .collect();

    let mut log_likelihood = Vec::with_capacity(cols);
    let mut unseen_log_likelihood = Vec::with_capacity(cols);
    for (f, feature_counts) in counts.iter().enumerate() {
        let vocab_size = from_count::<R>(train.vocabulary(f).len());
        let denominators: Vec<R> = class_counts
            .iter()
            .map(|&cc| from_count::<R>(cc) + alpha * vocab_size)
            .collect();
        log_likelihood.push(
            feature_counts
                .iter()
                .map(|per_class| {
                    per_class
                        .iter()
                        .zip(&denominators)
                        .map(|(&cnt, &den)| ((from_count::<R>(cnt) + alpha) / den).ln())
                        .collect()
                })
                .collect(),
        );
        unseen_log_likelihood.push(denominators.iter().map(|&den| (alpha / den).ln()).collect());
    }

    Ok(MnbModel {
        class_names: labels.vocabulary.clone(),
        alpha,
        log_prior,
        log_likelihood,
        unseen_log_likelihood,
        column_names: train.column_names().to_vec(),
        vocabularies: train.vocabularies().to_vec(),
    })
}

impl<R: Real> MnbModel<R> {
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn alpha(&self) -> R {
        self.alpha
    }

    pub fn log_prior(&self) -> &[R] {
        &self.log_prior
    }

    pub fn log_likelihood(&self, feature: usize, category: usize, class: usize) -> R {
        self.log_likelihood[feature][category][class]
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn vocabularies(&self) -> &[Vec<String>] {
        &self.vocabularies
    }

    /// Unnormalized per-class log scores for one row.
    ///
    /// `None` cells (missing or unseen categories) contribute the smoothing
    /// floor `log(alpha / (count(c) + alpha * |vocab(f)|))`.
    pub fn predict_log_scores(&self, row: &[Option<usize>]) -> Result<Vec<R>> {
        if row.len() != self.column_names.len() {
            return Err(Error::Argument(format!(
                "row has {} cells, model expects {}",
                row.len(),
                self.column_names.len()
            )));
        }
        let mut scores = self.log_prior.clone();
        for (f, cell) in row.iter().enumerate() {
            match cell {
                Some(v) if *v < self.log_likelihood[f].len() => {
                    for (c, s) in scores.iter_mut().enumerate() {
                        *s += self.log_likelihood[f][*v][c];
                    }
                }
                _ => {
                    for (c, s) in scores.iter_mut().enumerate() {
                        *s += self.unseen_log_likelihood[f][c];
                    }
                }
            }
        }
        Ok(scores)
    }

    /// Class with the highest log score; ties go to the lowest class index.
    pub fn predict(&self, row: &[Option<usize>]) -> Result<usize> {
        let scores = self.predict_log_scores(row)?;
        let mut best = 0usize;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        Ok(best)
    }

    /// Serializes the model as JSON keyed by feature/category/class strings.
    pub fn to_json(&self) -> Result<String> {
        let mut likelihood = BTreeMap::new();
        let mut unseen = BTreeMap::new();
        for (f, name) in self.column_names.iter().enumerate() {
            let mut per_category = BTreeMap::new();
            for (v, category) in self.vocabularies[f].iter().enumerate() {
                let per_class: BTreeMap<String, f64> = self
                    .class_names
                    .iter()
                    .enumerate()
                    .map(|(c, cn)| (cn.clone(), to_f64(self.log_likelihood[f][v][c])))
                    .collect();
                per_category.insert(category.clone(), per_class);
            }
            likelihood.insert(name.clone(), per_category);
            let floor: BTreeMap<String, f64> = self
                .class_names
                .iter()
                .enumerate()
                .map(|(c, cn)| (cn.clone(), to_f64(self.unseen_log_likelihood[f][c])))
                .collect();
            unseen.insert(name.clone(), floor);
        }
        let portable = MnbPortable {
            format_version: MNB_FORMAT_VERSION,
            model_type: "mnb".to_string(),
            alpha: to_f64(self.alpha),
            class_names: self.class_names.clone(),
            column_names: self.column_names.clone(),
            vocabularies: self
                .column_names
                .iter()
                .cloned()
                .zip(self.vocabularies.iter().cloned())
                .collect(),
            log_prior: self
                .class_names
                .iter()
                .enumerate()
                .map(|(c, cn)| (cn.clone(), to_f64(self.log_prior[c])))
                .collect(),
            log_likelihood: likelihood,
            unseen_log_likelihood: unseen,
        };
        Ok(serde_json::to_string_pretty(&portable)?)
    }

    /// Restores a model serialized by [`MnbModel::to_json`].
    pub fn from_json(text: &str) -> Result<MnbModel<R>> {
        let portable: MnbPortable = serde_json::from_str(text)?;
        if portable.format_version != MNB_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported mnb format version {}",
                portable.format_version
            )));
        }
        if portable.model_type != "mnb" {
            return Err(Error::Format(format!(
                "expected model_type 'mnb', found '{}'",
                portable.model_type
            )));
        }
        let lookup = |map: &BTreeMap<String, f64>, key: &str| -> Result<R> {
            map.get(key)
                .map(|&v| real::<R>(v))
                .ok_or_else(|| Error::Format(format!("missing entry '{key}'")))
        };
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
        let log_prior: Vec<R> = portable
            .class_names
            .iter()
            .map(|cn| lookup(&portable.log_prior, cn))
            .collect::<Result<_>>()?;
        let mut log_likelihood = Vec::with_capacity(portable.column_names.len());
        let mut unseen_log_likelihood = Vec::with_capacity(portable.column_names.len());
        for (f, name) in portable.column_names.iter().enumerate() {
            let per_category = portable
                .log_likelihood
                .get(name)
                .ok_or_else(|| Error::Format(format!("missing likelihoods for column '{name}'")))?;
            let table: Vec<Vec<R>> = vocabularies[f]
                .iter()
                .map(|category| {
                    let per_class = per_category.get(category).ok_or_else(|| {
                        Error::Format(format!("missing likelihoods for category '{category}'"))
                    })?;
                    portable
                        .class_names
                        .iter()
                        .map(|cn| lookup(per_class, cn))
                        .collect()
                })
                .collect::<Result<_>>()?;
            log_likelihood.push(table);
            let floor_map = portable.unseen_log_likelihood.get(name).ok_or_else(|| {
                Error::Format(format!("missing unseen floor for column '{name}'"))
            })?;
            unseen_log_likelihood.push(
                portable
                    .class_names
                    .iter()
                    .map(|cn| lookup(floor_map, cn))
                    .collect::<Result<_>>()?,
            );
        }
        Ok(MnbModel {
            class_names: portable.class_names,
            alpha: real::<R>(portable.alpha),
            log_prior,
            log_likelihood,
            unseen_log_likelihood,
            column_names: portable.column_names,
            vocabularies,
        })
    }
}

fn to_f64<R: Real>(x: R) -> f64 {
    num_traits::ToPrimitive::to_f64(&x).expect("scalar converts to f64")
}

#[derive(Serialize, Deserialize)]
struct MnbPortable {
    format_version: u32,
    model_type: String,
    alpha: f64,
    class_names: Vec<String>,
    column_names: Vec<String>,
    vocabularies: BTreeMap<String, Vec<String>>,
    log_prior: BTreeMap<String, f64>,
    log_likelihood: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
    unseen_log_likelihood: BTreeMap<String, BTreeMap<String, f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv_reader, IngestOptions};

    fn labeled(text: &str) -> CategoricalTable {
        load_csv_reader(
            text.as_bytes(),
            &IngestOptions {
                label_column: Some("y".to_string()),
                missing_tokens: vec!["NA".to_string()],
            },
        )
        .unwrap()
    }

    #[test]
    fn single_class_prior_dominates() {
        let t = labeled("a,y\nx,p\nz,p\nx,p\n");
        let model = fit(&t, 1.0f64).unwrap();
        assert!(model.log_prior()[0].exp() > 0.7);
        assert_eq!(model.predict(&[Some(0)]).unwrap(), 0);
        assert_eq!(model.predict(&[None]).unwrap(), 0);
    }

    #[test]
    fn hand_computed_smoothed_counts() {
        // 4 rows, 2 binary features, 2 classes, alpha = 1.
        let t = labeled("a,b,y\n0,0,p\n0,1,p\n1,1,q\n1,0,q\n");
        let model = fit(&t, 1.0f64).unwrap();
        // count(a=0, p) = 2, count(p) = 2, |vocab(a)| = 2:
        // likelihood = (2+1)/(2+2) = 3/4.
        assert!((model.log_likelihood(0, 0, 0) - (3.0f64 / 4.0).ln()).abs() < 1e-12);
        // count(a=0, q) = 0 -> (0+1)/(2+2) = 1/4.
        assert!((model.log_likelihood(0, 0, 1) - (0.25f64).ln()).abs() < 1e-12);
        // count(b=1, p) = 1 -> (1+1)/(2+2) = 1/2.
        assert!((model.log_likelihood(1, 1, 0) - (0.5f64).ln()).abs() < 1e-12);
        // priors: (2+1)/(4+2) = 1/2 each.
        assert!((model.log_prior()[0] - 0.5f64.ln()).abs() < 1e-12);
        assert!((model.log_prior()[1] - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn per_feature_class_probabilities_sum_to_one() {
        let t = labeled("a,b,y\nx,0,p\nz,1,p\nx,1,q\nw,0,q\nz,0,p\n");
        let model = fit(&t, 0.7f64).unwrap();
        for f in 0..2 {
            for c in 0..2 {
                let total: f64 = (0..t.vocabulary(f).len())
                    .map(|v| model.log_likelihood(f, v, c).exp())
                    .sum();
                assert!((total - 1.0).abs() < 1e-9, "feature {f} class {c}: {total}");
            }
        }
    }

    #[test]
    fn normalized_scores_sum_to_one() {
        let t = labeled("a,b,y\n0,0,p\n0,1,p\n1,1,q\n1,0,q\n");
        let model = fit(&t, 1.0f64).unwrap();
        let scores = model.predict_log_scores(&[Some(0), Some(1)]).unwrap();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let normalized: f64 = scores.iter().map(|s| (s - max).exp() / z).sum();
        assert!((normalized - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_scores_match_joint_probability_oracle() {
        let t = labeled("a,b,c,y\n0,x,0,p\n1,y,0,p\n0,y,1,q\n1,x,1,q\n0,x,1,q\n");
        let alpha = 1.0f64;
        let model = fit(&t, alpha).unwrap();
        let labels = t.labels().unwrap();

        // Oracle: recount everything and multiply plain probabilities.
        let n = t.row_count();
        let class_count = labels.vocabulary.len();
        let mut class_totals = vec![0usize; class_count];
        for &c in &labels.values {
            class_totals[c] += 1;
        }
        let joint = |row: &[usize], class: usize| -> f64 {
            let mut p =
                (class_totals[class] as f64 + alpha) / (n as f64 + alpha * class_count as f64);
            for (f, &v) in row.iter().enumerate() {
                let mut cnt = 0usize;
                for r in 0..n {
                    if t.cell(r, f) == Some(v) && labels.values[r] == class {
                        cnt += 1;
                    }
                }
                let vocab = t.vocabulary(f).len() as f64;
                p *= (cnt as f64 + alpha) / (class_totals[class] as f64 + alpha * vocab);
            }
            p
        };

        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let row = [a, b, c];
                    let cells: Vec<Option<usize>> = row.iter().map(|&v| Some(v)).collect();
                    let scores = model.predict_log_scores(&cells).unwrap();
                    for (class, &score) in scores.iter().enumerate() {
                        let expected = joint(&row, class).ln();
                        assert!((score - expected).abs() < 1e-9, "row {row:?} class {class}");
                    }
                }
            }
        }
    }

    #[test]
    fn class_indifferent_feature_never_changes_the_argmax() {
        // A constant column has identical likelihoods across classes, so its
        // contribution is a per-row constant shift.
        let without = labeled("a,b,y\n0,x,p\n1,y,p\n0,y,q\n1,x,q\n0,x,p\n");
        let with = labeled("a,b,k,y\n0,x,z,p\n1,y,z,p\n0,y,z,q\n1,x,z,q\n0,x,z,p\n");
        let m1 = fit(&without, 1.0f64).unwrap();
        let m2 = fit(&with, 1.0f64).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let plain = m1.predict(&[Some(a), Some(b)]).unwrap();
                let extended = m2.predict(&[Some(a), Some(b), Some(0)]).unwrap();
                assert_eq!(plain, extended);
            }
        }
    }

    #[test]
    fn uniform_likelihoods_fall_back_to_prior() {
        // Feature value identical across classes: decision rests on the prior.
        let t = labeled("a,y\nk,p\nk,p\nk,p\nk,q\n");
        let model = fit(&t, 1.0f64).unwrap();
        assert_eq!(model.predict(&[Some(0)]).unwrap(), 0);
    }

    #[test]
    fn deterministic_mapping_memorized_at_small_alpha() {
        let t = labeled("a,y\n0,p\n0,p\n1,q\n1,q\n2,r\n2,r\n");
        let model = fit(&t, 0.01f64).unwrap();
        for r in 0..t.row_count() {
            let cells: Vec<Option<usize>> = t.row(r).to_vec();
            assert_eq!(
                model.predict(&cells).unwrap(),
                t.labels().unwrap().values[r]
            );
        }
    }

    #[test]
    fn duplicating_rows_with_alpha_zero_keeps_parameters() {
        let text = "a,b,y\n0,0,p\n0,1,p\n1,1,q\n1,0,q\n0,0,q\n1,1,p\n";
        let t = labeled(text);
        let doubled_text = {
            let mut s = String::from("a,b,y\n");
            let body = &text["a,b,y\n".len()..];
            s.push_str(body);
            s.push_str(body);
            s
        };
        let t2 = labeled(&doubled_text);
        let m1 = fit_inner(&t, 0.0f64).unwrap();
        let m2 = fit_inner(&t2, 0.0f64).unwrap();
        for c in 0..2 {
            assert!((m1.log_prior()[c] - m2.log_prior()[c]).abs() < 1e-12);
        }
        for f in 0..2 {
            for v in 0..2 {
                for c in 0..2 {
                    assert!(
                        (m1.log_likelihood(f, v, c) - m2.log_likelihood(f, v, c)).abs() < 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn prediction_invariant_to_feature_order() {
        let t = labeled("a,b,y\n0,x,p\n1,y,p\n0,y,q\n1,x,q\n0,x,p\n");
        let t_swapped = labeled("b,a,y\nx,0,p\ny,1,p\ny,0,q\nx,1,q\nx,0,p\n");
        let m1 = fit(&t, 1.0f64).unwrap();
        let m2 = fit(&t_swapped, 1.0f64).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let p1 = m1.predict(&[Some(a), Some(b)]).unwrap();
                let p2 = m2.predict(&[Some(b), Some(a)]).unwrap();
                assert_eq!(p1, p2);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = labeled("a,y\nx,p\n");
        assert!(matches!(fit(&t, 0.0f64), Err(Error::Argument(_))));
        assert!(matches!(fit(&t, -1.0f64), Err(Error::Argument(_))));
        let no_labels = load_csv_reader("a\nx\n".as_bytes(), &IngestOptions::default()).unwrap();
        assert!(fit(&no_labels, 1.0f64).is_err());
        let missing = labeled("a,y\nNA,p\n");
        assert!(matches!(fit(&missing, 1.0f64), Err(Error::State(_))));
        let model = fit(&t, 1.0f64).unwrap();
        assert!(model.predict(&[Some(0), Some(0)]).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = labeled("a,b,y\n0,x,p\n1,y,q\n0,y,p\n");
        let model = fit(&t, 1.5f64).unwrap();
        let json = model.to_json().unwrap();
        let back = MnbModel::<f64>::from_json(&json).unwrap();
        assert_eq!(back.class_names(), model.class_names());
        for f in 0..2 {
            for v in 0..t.vocabulary(f).len() {
                for c in 0..2 {
                    assert_eq!(back.log_likelihood(f, v, c), model.log_likelihood(f, v, c));
                }
            }
        }
        let scores_a = model.predict_log_scores(&[Some(0), None]).unwrap();
        let scores_b = back.predict_log_scores(&[Some(0), None]).unwrap();
        assert_eq!(scores_a, scores_b);
        assert!(MnbModel::<f64>::from_json(
            &json.replace("\"format_version\": 1", "\"format_version\": 3")
        )
        .is_err());
    }
}
