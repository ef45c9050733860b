//! Labels, valence grouping, the synthetic stand-in corpus and fold splitting.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::image::Image;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, seeded};
use crate::{math, Error, Result};

/// The seven posed expressions of the JAFFE corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Expression {
    Happy,
    Sad,
    Surprise,
    Anger,
    Disgust,
    Fear,
    Neutral,
}

impl Expression {
    pub const ALL: [Expression; 7] = [
        Expression::Happy,
        Expression::Sad,
        Expression::Surprise,
        Expression::Anger,
        Expression::Disgust,
        Expression::Fear,
        Expression::Neutral,
    ];

    /// Two-letter JAFFE code.
    pub fn code(self) -> &'static str {
        match self {
            Expression::Happy => "HA",
            Expression::Sad => "SA",
            Expression::Surprise => "SU",
            Expression::Anger => "AN",
            Expression::Disgust => "DI",
            Expression::Fear => "FE",
            Expression::Neutral => "NE",
        }
    }

    pub fn from_code(code: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.code().eq_ignore_ascii_case(code))
            .ok_or_else(|| Error::UnknownExpression(code.to_string()))
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Three-way grouping used as the class label. The discriminant is the
/// confusion-matrix index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Valence {
    Positive = 0,
    Neutral = 1,
    Negative = 2,
}

impl Valence {
    pub const ALL: [Valence; 3] = [Valence::Positive, Valence::Neutral, Valence::Negative];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Valence::Positive => "positive",
            Valence::Neutral => "neutral",
            Valence::Negative => "negative",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(name))
    }

    /// An expression that maps to this valence under the default mapping.
    pub fn representative(self) -> Expression {
        match self {
            Valence::Positive => Expression::Happy,
            Valence::Neutral => Expression::Neutral,
            Valence::Negative => Expression::Sad,
        }
    }
}

/// Total table from expression to valence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValenceMapping([Valence; 7]);

impl ValenceMapping {
    pub fn new(table: [(Expression, Valence); 7]) -> Result<Self> {
        let mut out = [None; 7];
        for (e, v) in table {
            out[e.index()] = Some(v);
        }
        let mut mapped = [Valence::Neutral; 7];
        for (slot, v) in mapped.iter_mut().zip(out) {
            *slot = v.ok_or(Error::InvalidConfig("valence mapping must cover all seven expressions"))?;
        }
        Ok(Self(mapped))
    }

    pub fn get(&self, e: Expression) -> Valence {
        self.0[e.index()]
    }

    pub fn set(&mut self, e: Expression, v: Valence) {
        self.0[e.index()] = v;
    }
}

impl Default for ValenceMapping {
    /// Happy is positive, Neutral is neutral, everything else is negative.
    fn default() -> Self {
        let mut table = [Valence::Negative; 7];
        table[Expression::Happy.index()] = Valence::Positive;
        table[Expression::Neutral.index()] = Valence::Neutral;
        Self(table)
    }
}

pub fn map_valence(e: Expression, mapping: &ValenceMapping) -> Valence {
    mapping.get(e)
}

/// Parses a JAFFE filename of the form `subject.EXPRn.id.ext`, e.g.
/// `KA.HA2.30.tiff`. Any directory prefix is ignored.
pub fn parse_jaffe_label(filename: &str) -> Result<Expression> {
    let base = filename.rsplit(['/', '\\']).next().unwrap_or(filename);
    let malformed = || Error::MalformedFilename(filename.to_string());
    let mut tokens = base.split('.');
    let subject = tokens.next().ok_or_else(malformed)?;
    let expr = tokens.next().ok_or_else(malformed)?;
    if subject.is_empty() || expr.len() < 2 || !expr.is_char_boundary(2) {
        return Err(malformed());
    }
    Expression::from_code(&expr[..2])
}

/// Feature vectors with their valence labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<Valence>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<Valence>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: features.rows(),
                found: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[Valence] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; 3] {
        class_counts(&self.labels)
    }
}

pub(crate) fn class_counts(labels: &[Valence]) -> [usize; 3] {
    let mut counts = [0; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Parameters of the synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SynthSpec {
    pub n_per_class: usize,
    pub side: usize,
    pub seed: u64,
    /// Standard deviation of the additive pixel noise.
    pub noise: f64,
    /// Width of the uniform per-image brightness offset.
    pub offset_jitter: f64,
}

impl SynthSpec {
    pub fn new(n_per_class: usize, side: usize, seed: u64) -> Self {
        Self {
            n_per_class,
            side,
            seed,
            ..Self::default()
        }
    }
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_per_class: 40,
            side: 64,
            seed: 7,
            noise: 0.03,
            offset_jitter: 0.3,
        }
    }
}

// Bump centres (row, col) in unit coordinates. Every class has the same
// number of equally sized bumps so total brightness carries no label signal.
const LAYOUTS: [[(f64, f64); 4]; 3] = [
    [(0.30, 0.30), (0.30, 0.70), (0.72, 0.22), (0.72, 0.78)],
    [(0.28, 0.50), (0.50, 0.25), (0.50, 0.75), (0.75, 0.50)],
    [(0.22, 0.22), (0.22, 0.78), (0.55, 0.50), (0.80, 0.50)],
];
const BUMP_AMPLITUDE: f64 = 0.45;
const BUMP_WIDTH: f64 = 0.07;
const POSITION_JITTER: f64 = 0.04;

/// Generates `3 * n_per_class` images, interleaving Positive, Neutral and
/// Negative. Each image is a sum of Gaussian bumps at class-specific places
/// with jittered positions and amplitudes, a random brightness offset and
/// additive Gaussian noise, clipped to `[0, 1]`.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Vec<(Image, Valence)>> {
    if spec.n_per_class == 0 {
        return Err(Error::InvalidConfig("n_per_class must be at least 1"));
    }
    if !spec.side.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(spec.side));
    }
    let mut out = Vec::with_capacity(3 * spec.n_per_class);
    for i in 0..spec.n_per_class {
        for class in Valence::ALL {
            let index = (3 * i + class.index()) as u64;
            out.push((synth_image(spec, class, derive_seed(spec.seed, index)), class));
        }
    }
    Ok(out)
}

fn synth_image(spec: &SynthSpec, class: Valence, seed: u64) -> Image {
    let mut rng = seeded(seed);
    let side = spec.side;
    let s = side as f64;
    let offset = 0.05 + rng.random::<f64>() * spec.offset_jitter;
    let bumps: Vec<(f64, f64, f64)> = LAYOUTS[class.index()]
        .iter()
        .map(|&(r, c)| {
            let jr = (rng.random::<f64>() * 2.0 - 1.0) * POSITION_JITTER;
            let jc = (rng.random::<f64>() * 2.0 - 1.0) * POSITION_JITTER;
            let amp = BUMP_AMPLITUDE * (0.8 + 0.4 * rng.random::<f64>());
            ((r + jr) * s, (c + jc) * s, amp)
        })
        .collect();
    let width = BUMP_WIDTH * s;
    let inv = 1.0 / (2.0 * width * width);
    let mut pixels = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let (y, x) = (row as f64 + 0.5, col as f64 + 0.5);
            let mut v = offset;
            for &(br, bc, amp) in &bumps {
                let d2 = (y - br) * (y - br) + (x - bc) * (x - bc);
                v += amp * math::exp(-d2 * inv);
            }
            if spec.noise > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                v += spec.noise * z;
            }
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    Image::new(side, side, pixels).expect("side*side pixels")
}

/// Fold id per sample index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, index: usize) -> usize {
        self.assignment[index]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded k-fold split. With labels, each class is shuffled separately and
/// the classes are dealt round-robin into the folds in one continuous pass,
/// which keeps both per-class and total fold sizes within one of each other.
pub fn kfold_split(
    n: usize,
    k: usize,
    seed: u64,
    labels: Option<&[Valence]>,
) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { k, n });
    }
    let mut rng = seeded(seed);
    let order: Vec<usize> = match labels {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "label count",
                    expected: n,
                    found: labels.len(),
                });
            }
            let mut order = Vec::with_capacity(n);
            for class in Valence::ALL {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                idx.shuffle(&mut rng);
                order.extend(idx);
            }
            order
        }
    };
    let mut assignment = alloc::vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok(FoldAssignment { k, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_jaffe_names() {
        assert_eq!(parse_jaffe_label("KA.HA2.30.png").unwrap(), Expression::Happy);
        assert_eq!(parse_jaffe_label("KM.NE3.17.png").unwrap(), Expression::Neutral);
        assert_eq!(parse_jaffe_label("YM.SU1.56.png").unwrap(), Expression::Surprise);
        assert_eq!(
            parse_jaffe_label("data/jaffe/TM.FE2.191.tiff").unwrap(),
            Expression::Fear
        );
    }

    #[test]
    fn rejects_bad_names() {
        assert!(matches!(
            parse_jaffe_label("KA.XX1.1.png"),
            Err(Error::UnknownExpression(_))
        ));
        assert!(matches!(
            parse_jaffe_label("nodots"),
            Err(Error::MalformedFilename(_))
        ));
        assert!(matches!(
            parse_jaffe_label("KA.H.1.png"),
            Err(Error::MalformedFilename(_))
        ));
    }

    #[test]
    fn default_mapping() {
        let m = ValenceMapping::default();
        assert_eq!(map_valence(Expression::Happy, &m), Valence::Positive);
        assert_eq!(map_valence(Expression::Neutral, &m), Valence::Neutral);
        assert_eq!(map_valence(Expression::Surprise, &m), Valence::Negative);
        let mut seen = [false; 3];
        for e in Expression::ALL {
            seen[map_valence(e, &m).index()] = true;
        }
        assert_eq!(seen, [true; 3]);
        for v in Valence::ALL {
            assert_eq!(m.get(v.representative()), v);
        }
    }

    #[test]
    fn mapping_must_be_total() {
        let table = [(Expression::Happy, Valence::Positive); 7];
        assert!(ValenceMapping::new(table).is_err());
    }

    #[test]
    fn synth_cardinality_and_determinism() {
        let spec = SynthSpec::new(1, 16, 7);
        let a = synth_dataset(&spec).unwrap();
        let labels: Vec<_> = a.iter().map(|(_, v)| *v).collect();
        assert_eq!(labels, Valence::ALL);
        let b = synth_dataset(&spec).unwrap();
        assert_eq!(a, b);
        let c = synth_dataset(&SynthSpec::new(1, 16, 8)).unwrap();
        assert_ne!(a, c);
        for (img, _) in &a {
            assert!(img.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn kfold_sizes() {
        let f = kfold_split(213, 5, 1, None).unwrap();
        let mut sizes = f.fold_sizes();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, [43, 43, 43, 42, 42]);
        let f = kfold_split(5, 5, 3, None).unwrap();
        assert_eq!(f.fold_sizes(), [1; 5]);
    }

    #[test]
    fn kfold_stratified_counts() {
        let mut labels = alloc::vec![Valence::Positive; 5];
        labels.extend([Valence::Negative; 5]);
        let f = kfold_split(10, 3, 11, Some(&labels)).unwrap();
        for fold in 0..3 {
            let pos = f
                .test_indices(fold)
                .iter()
                .filter(|&&i| labels[i] == Valence::Positive)
                .count();
            assert!((1..=2).contains(&pos), "fold {fold} has {pos} positives");
        }
    }

    #[test]
    fn kfold_rejects_bad_k() {
        assert_eq!(kfold_split(4, 5, 0, None), Err(Error::InvalidFolds { k: 5, n: 4 }));
        assert_eq!(kfold_split(4, 1, 0, None), Err(Error::InvalidFolds { k: 1, n: 4 }));
    }
}
