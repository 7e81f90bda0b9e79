//! Entropy-based categorical decision tree with multiway splits and
//! reduced-error post-pruning.
//!
//! Splits branch one child per category present in the partition, choosing the
//! unused feature with the highest information gain (ties to the lowest column
//! index). No feature repeats on a root-to-leaf path. Pruning replaces an
//! internal node by its majority-class leaf whenever that does not decrease
//! holdout accuracy, bottom-up, ties in favor of pruning.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{train_test_split, CategoricalTable};
use crate::error::{Error, Result};
use crate::num::{from_count, real, Real};
use crate::rng::DEFAULT_SEED;

pub const DTREE_FORMAT_VERSION: u32 = 1;

/// Tree growth and pruning hyperparameters.
#[derive(Debug, Clone)]
pub struct TreeParams<R: Real = f64> {
    /// Depth cap; `Some(0)` forces a single leaf.
    pub max_depth: Option<usize>,
    /// Nodes with fewer samples are not split.
    pub min_samples_split: usize,
    /// Splits with gain at or below this threshold are rejected.
    pub min_gain: R,
    /// Enable reduced-error post-pruning on an internal holdout.
    pub prune: bool,
    /// Fraction of the training data held out for pruning.
    pub prune_fraction: f64,
    /// Seed for carving the pruning holdout.
    pub seed: u64,
}

impl<R: Real> Default for TreeParams<R> {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_gain: R::zero(),
            prune: false,
            prune_fraction: 0.2,
            seed: DEFAULT_SEED,
        }
    }
}

/// One node of a fitted tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Internal {
        split_feature: usize,
        /// Category index -> subtree, only for categories present at fit time.
        children: BTreeMap<usize, TreeNode>,
        majority_class: usize,
        sample_count: usize,
        class_counts: Vec<usize>,
    },
    Leaf {
        class: usize,
        sample_count: usize,
        class_counts: Vec<usize>,
    },
}

impl TreeNode {
    pub fn sample_count(&self) -> usize {
        match self {
            TreeNode::Internal { sample_count, .. } | TreeNode::Leaf { sample_count, .. } => {
                *sample_count
            }
        }
    }

    pub fn class_counts(&self) -> &[usize] {
        match self {
            TreeNode::Internal { class_counts, .. } | TreeNode::Leaf { class_counts, .. } => {
                class_counts
            }
        }
    }

    /// Number of nodes in the subtree.
    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => {
                1 + children.values().map(TreeNode::node_count).sum::<usize>()
            }
        }
    }
}

/// Fitted decision tree with the schema snapshot needed for prediction and
/// portable serialization.
#[derive(Debug, Clone)]
pub struct TreeModel {
    root: TreeNode,
    class_names: Vec<String>,
    column_names: Vec<String>,
    vocabularies: Vec<Vec<String>>,
}

/// Shannon entropy in bits of a class-count vector.
pub fn entropy<R: Real>(class_counts: &[usize]) -> Result<R> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::Argument(
            "entropy of an all-zero count vector is undefined".to_string(),
        ));
    }
    let total_r = from_count::<R>(total);
    let mut h = R::zero();
    for &c in class_counts {
        if c > 0 {
            let p = from_count::<R>(c) / total_r;
            h = h - p * p.log2();
        }
    }
    Ok(h)
}

/// Information gain of splitting `partition` on `feature`.
pub fn information_gain<R: Real>(partition: &CategoricalTable, feature: usize) -> Result<R> {
    let labels = partition
        .labels()
        .ok_or_else(|| Error::Argument("partition has no labels".to_string()))?;
    if partition.row_count() == 0 {
        return Err(Error::Argument("partition is empty".to_string()));
    }
    if feature >= partition.column_count() {
        return Err(Error::Argument(format!("unknown feature index {feature}")));
    }
    let rows: Vec<usize> = (0..partition.row_count()).collect();
    let class_count = labels.vocabulary.len();
    let mut counts = vec![0usize; class_count];
    for &r in &rows {
        counts[labels.values[r]] += 1;
    }
    let parent = entropy::<R>(&counts)?;
    gain_for_rows(partition, &rows, feature, parent)
}

/// Gain over an explicit row subset, given the parent entropy.
fn gain_for_rows<R: Real>(
    table: &CategoricalTable,
    rows: &[usize],
    feature: usize,
    parent_entropy: R,
) -> Result<R> {
    let labels = table.labels().expect("caller checked labels");
    let class_count = labels.vocabulary.len();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        let v = table
            .cell(r, feature)
            .ok_or_else(|| Error::State("missing cell during gain computation".to_string()))?;
        groups.entry(v).or_default().push(labels.values[r]);
    }
    let n = from_count::<R>(rows.len());
    let mut weighted = R::zero();
    for group in groups.values() {
        let mut counts = vec![0usize; class_count];
        for &c in group {
            counts[c] += 1;
        }
        let h = entropy::<R>(&counts)?;
        weighted += from_count::<R>(group.len()) / n * h;
    }
    Ok(parent_entropy - weighted)
}

/// Grows a tree on the training table.
///
/// Recursion stops at pure nodes, exhausted features, the depth cap, the
/// minimum split size, or when the best gain does not exceed `min_gain`.
/// With `params.prune` set, a seeded `prune_fraction` holdout is carved from
/// the training data before growing and [`prune`] is applied afterwards.
pub fn fit<R: Real>(train: &CategoricalTable, params: &TreeParams<R>) -> Result<TreeModel> {
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
    if params.min_samples_split < 2 {
        return Err(Error::Argument(
            "min_samples_split must be at least 2".to_string(),
        ));
    }
    if params.prune && !(params.prune_fraction > 0.0 && params.prune_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "prune_fraction must be in (0, 1), got {}",
            params.prune_fraction
        )));
    }

    let schema = TreeModel {
        root: TreeNode::Leaf {
            class: 0,
            sample_count: 0,
            class_counts: vec![],
        },
        class_names: labels.vocabulary.clone(),
        column_names: train.column_names().to_vec(),
        vocabularies: train.vocabularies().to_vec(),
    };

    if params.prune {
        let pair = train_test_split(train, params.prune_fraction, params.seed, false)?;
        if pair.test.row_count() == 0 || pair.train.row_count() == 0 {
            return Err(Error::Fit(
                "training set too small to carve a pruning holdout".to_string(),
            ));
        }
        let grown = grow_root(&pair.train, params)?;
        let model = TreeModel {
            root: grown,
            ..schema
        };
        return prune(&model, &pair.test);
    }

    let root = grow_root(train, params)?;
    Ok(TreeModel { root, ..schema })
}

fn grow_root<R: Real>(train: &CategoricalTable, params: &TreeParams<R>) -> Result<TreeNode> {
    let rows: Vec<usize> = (0..train.row_count()).collect();
    let used = vec![false; train.column_count()];
    grow(train, &rows, &used, 0, params)
}

fn majority(class_counts: &[usize]) -> usize {
    let mut best = 0usize;
    for (c, &count) in class_counts.iter().enumerate().skip(1) {
        if count > class_counts[best] {
            best = c;
        }
    }
    best
}

fn grow<R: Real>(
    table: &CategoricalTable,
    rows: &[usize],
    used: &[bool],
    depth: usize,
    params: &TreeParams<R>,
) -> Result<TreeNode> {
    let labels = table.labels().expect("caller checked labels");
    let class_count = labels.vocabulary.len();
    let mut class_counts = vec![0usize; class_count];
    for &r in rows {
        class_counts[labels.values[r]] += 1;
    }
    let majority_class = majority(&class_counts);
    let leaf = || TreeNode::Leaf {
        class: majority_class,
        sample_count: rows.len(),
        class_counts: class_counts.clone(),
    };

    let pure = class_counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_capped = params.max_depth.is_some_and(|cap| depth >= cap);
    let too_small = rows.len() < params.min_samples_split;
    if pure || depth_capped || too_small {
        return Ok(leaf());
    }

    let parent_entropy = entropy::<R>(&class_counts)?;
    let mut best: Option<(usize, R)> = None;
    for (f, _) in used.iter().enumerate().filter(|(_, &u)| !u) {
        let gain = gain_for_rows(table, rows, f, parent_entropy)?;
        debug_assert!(gain >= -real::<R>(1e-9), "information gain must be >= 0");
        if best.as_ref().is_none_or(|(_, g)| gain > *g) {
            best = Some((f, gain));
        }
    }
    let Some((feature, gain)) = best else {
        return Ok(leaf()); // every feature already used on this path
    };
    if gain <= params.min_gain {
        return Ok(leaf());
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        let v = table.cell(r, feature).expect("no missing cells");
        groups.entry(v).or_default().push(r);
    }
    let mut child_used = used.to_vec();
    child_used[feature] = true;
    let mut children = BTreeMap::new();
    for (category, child_rows) in groups {
        let child = grow(table, &child_rows, &child_used, depth + 1, params)?;
        children.insert(category, child);
    }
    Ok(TreeNode::Internal {
        split_feature: feature,
        children,
        majority_class,
        sample_count: rows.len(),
        class_counts,
    })
}

impl TreeModel {
    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn vocabularies(&self) -> &[Vec<String>] {
        &self.vocabularies
    }

    /// Predicts the class of one row.
    ///
    /// Descends by the row's category at each internal node; a category with
    /// no child (unseen at fit time or absent from that partition) falls back
    /// to the node's majority class.
    pub fn predict(&self, row: &[Option<usize>]) -> Result<usize> {
        if row.len() != self.column_names.len() {
            return Err(Error::Argument(format!(
                "row has {} cells, model expects {}",
                row.len(),
                self.column_names.len()
            )));
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class, .. } => return Ok(*class),
                TreeNode::Internal {
                    split_feature,
                    children,
                    majority_class,
                    ..
                } => {
                    let next = row[*split_feature].and_then(|v| children.get(&v));
                    match next {
                        Some(child) => node = child,
                        None => return Ok(*majority_class),
                    }
                }
            }
        }
    }

    /// Accuracy over a labeled table.
    pub fn accuracy_on(&self, table: &CategoricalTable) -> Result<f64> {
        let labels = table
            .labels()
            .ok_or_else(|| Error::Argument("table has no labels".to_string()))?;
        if table.row_count() == 0 {
            return Err(Error::Argument("table is empty".to_string()));
        }
        let mut correct = 0usize;
        for r in 0..table.row_count() {
            if self.predict(table.row(r))? == labels.values[r] {
                correct += 1;
            }
        }
        Ok(correct as f64 / table.row_count() as f64)
    }
}

/// Reduced-error pruning against a validation table.
///
/// Bottom-up, each internal node is replaced by its majority-class leaf
/// whenever the replacement does not decrease validation accuracy (ties favor
/// pruning). The result's validation accuracy is never below the input's.
pub fn prune(model: &TreeModel, validation: &CategoricalTable) -> Result<TreeModel> {
    let labels = validation
        .labels()
        .ok_or_else(|| Error::Prune("validation table has no labels".to_string()))?;
    if validation.row_count() == 0 {
        return Err(Error::Prune("validation table is empty".to_string()));
    }
    if validation.column_count() != model.column_names.len() {
        return Err(Error::Prune(format!(
            "validation has {} columns, model expects {}",
            validation.column_count(),
            model.column_names.len()
        )));
    }
    let rows: Vec<usize> = (0..validation.row_count()).collect();
    let (root, _) = prune_node(&model.root, validation, &labels.values, &rows);
    Ok(TreeModel {
        root,
        class_names: model.class_names.clone(),
        column_names: model.column_names.clone(),
        vocabularies: model.vocabularies.clone(),
    })
}

/// Prunes a subtree given the validation rows routed to it; returns the new
/// subtree and its validation error count.
fn prune_node(
    node: &TreeNode,
    validation: &CategoricalTable,
    truth: &[usize],
    rows: &[usize],
) -> (TreeNode, usize) {
    match node {
        TreeNode::Leaf { class, .. } => {
            let errors = rows.iter().filter(|&&r| truth[r] != *class).count();
            (node.clone(), errors)
        }
        TreeNode::Internal {
            split_feature,
            children,
            majority_class,
            sample_count,
            class_counts,
        } => {
            let mut routed: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            let mut stranded_errors = 0usize;
            for &r in rows {
                match validation.cell(r, *split_feature) {
                    Some(v) if children.contains_key(&v) => routed.entry(v).or_default().push(r),
                    _ => {
                        // No child to follow: this node answers with its majority.
                        if truth[r] != *majority_class {
                            stranded_errors += 1;
                        }
                    }
                }
            }
            let mut new_children = BTreeMap::new();
            let mut subtree_errors = stranded_errors;
            for (category, child) in children {
                let empty = Vec::new();
                let child_rows = routed.get(category).unwrap_or(&empty);
                let (new_child, errors) = prune_node(child, validation, truth, child_rows);
                subtree_errors += errors;
                new_children.insert(*category, new_child);
            }
            let leaf_errors = rows
                .iter()
                .filter(|&&r| truth[r] != *majority_class)
                .count();
            if leaf_errors <= subtree_errors {
                (
                    TreeNode::Leaf {
                        class: *majority_class,
                        sample_count: *sample_count,
                        class_counts: class_counts.clone(),
                    },
                    leaf_errors,
                )
            } else {
                (
                    TreeNode::Internal {
                        split_feature: *split_feature,
                        children: new_children,
                        majority_class: *majority_class,
                        sample_count: *sample_count,
                        class_counts: class_counts.clone(),
                    },
                    subtree_errors,
                )
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PortableNode {
    Internal {
        feature: String,
        majority_class: String,
        sample_count: usize,
        class_counts: BTreeMap<String, usize>,
        children: BTreeMap<String, PortableNode>,
    },
    Leaf {
        class: String,
        sample_count: usize,
        class_counts: BTreeMap<String, usize>,
    },
}

#[derive(Serialize, Deserialize)]
struct DtreePortable {
    format_version: u32,
    model_type: String,
    class_names: Vec<String>,
    column_names: Vec<String>,
    vocabularies: BTreeMap<String, Vec<String>>,
    root: PortableNode,
}

impl TreeModel {
    fn node_to_portable(&self, node: &TreeNode) -> PortableNode {
        let counts_map = |counts: &[usize]| {
            self.class_names
                .iter()
                .cloned()
                .zip(counts.iter().copied())
                .filter(|(_, n)| *n > 0)
                .collect()
        };
        match node {
            TreeNode::Leaf {
                class,
                sample_count,
                class_counts,
            } => PortableNode::Leaf {
                class: self.class_names[*class].clone(),
                sample_count: *sample_count,
                class_counts: counts_map(class_counts),
            },
            TreeNode::Internal {
                split_feature,
                children,
                majority_class,
                sample_count,
                class_counts,
            } => PortableNode::Internal {
                feature: self.column_names[*split_feature].clone(),
                majority_class: self.class_names[*majority_class].clone(),
                sample_count: *sample_count,
                class_counts: counts_map(class_counts),
                children: children
                    .iter()
                    .map(|(cat, child)| {
                        (
                            self.vocabularies[*split_feature][*cat].clone(),
                            self.node_to_portable(child),
                        )
                    })
                    .collect(),
            },
        }
    }

    /// Serializes the tree as JSON with category and class names as strings.
    pub fn to_json(&self) -> Result<String> {
        let portable = DtreePortable {
            format_version: DTREE_FORMAT_VERSION,
            model_type: "dtree".to_string(),
            class_names: self.class_names.clone(),
            column_names: self.column_names.clone(),
            vocabularies: self
                .column_names
                .iter()
                .cloned()
                .zip(self.vocabularies.iter().cloned())
                .collect(),
            root: self.node_to_portable(&self.root),
        };
        Ok(serde_json::to_string_pretty(&portable)?)
    }

    /// Restores a tree serialized by [`TreeModel::to_json`].
    pub fn from_json(text: &str) -> Result<TreeModel> {
        let portable: DtreePortable = serde_json::from_str(text)?;
        if portable.format_version != DTREE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported dtree format version {}",
                portable.format_version
            )));
        }
        if portable.model_type != "dtree" {
            return Err(Error::Format(format!(
                "expected model_type 'dtree', found '{}'",
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
        let class_index = |name: &str| -> Result<usize> {
            portable
                .class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Format(format!("unknown class '{name}'")))
        };
        let counts_vec = |map: &BTreeMap<String, usize>| -> Result<Vec<usize>> {
            let mut counts = vec![0usize; portable.class_names.len()];
            for (name, n) in map {
                counts[class_index(name)?] = *n;
            }
            Ok(counts)
        };

        type CountsVecFn<'a> = &'a dyn Fn(&BTreeMap<String, usize>) -> Result<Vec<usize>>;

        fn convert(
            node: &PortableNode,
            portable: &DtreePortable,
            vocabularies: &[Vec<String>],
            class_index: &dyn Fn(&str) -> Result<usize>,
            counts_vec: CountsVecFn<'_>,
        ) -> Result<TreeNode> {
            match node {
                PortableNode::Leaf {
                    class,
                    sample_count,
                    class_counts,
                } => Ok(TreeNode::Leaf {
                    class: class_index(class)?,
                    sample_count: *sample_count,
                    class_counts: counts_vec(class_counts)?,
                }),
                PortableNode::Internal {
                    feature,
                    majority_class,
                    sample_count,
                    class_counts,
                    children,
                } => {
                    let f = portable
                        .column_names
                        .iter()
                        .position(|c| c == feature)
                        .ok_or_else(|| Error::Format(format!("unknown feature '{feature}'")))?;
                    let mut converted = BTreeMap::new();
                    for (category, child) in children {
                        let v = vocabularies[f]
                            .iter()
                            .position(|c| c == category)
                            .ok_or_else(|| {
                                Error::Format(format!("unknown category '{category}'"))
                            })?;
                        converted.insert(
                            v,
                            convert(child, portable, vocabularies, class_index, counts_vec)?,
                        );
                    }
                    Ok(TreeNode::Internal {
                        split_feature: f,
                        children: converted,
                        majority_class: class_index(majority_class)?,
                        sample_count: *sample_count,
                        class_counts: counts_vec(class_counts)?,
                    })
                }
            }
        }

        let root = convert(
            &portable.root,
            &portable,
            &vocabularies,
            &class_index,
            &counts_vec,
        )?;
        Ok(TreeModel {
            root,
            class_names: portable.class_names,
            column_names: portable.column_names,
            vocabularies,
        })
    }
}
