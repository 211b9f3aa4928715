use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DataGenError;
use crate::rules::{Adverb, Entity};
use crate::textio::{RuleStyle, Vocabulary};

/// Per-depth (True, False) instance counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthCell {
    pub depth: usize,
    pub true_count: usize,
    pub false_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DepthProfile {
    pub cells: Vec<DepthCell>,
}

/// Training sets whose depth distribution is tabulated for RuleTaker-pro.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainingSet {
    M1,
    M2,
    M3,
    Mmax,
}

impl DepthProfile {
    pub fn new(cells: Vec<DepthCell>) -> Self {
        DepthProfile { cells }
    }

    /// Full-size RuleTaker-pro training distribution, D0..D5 True/False.
    pub fn ruletaker_pro(set: TrainingSet) -> Self {
        let counts: [(usize, usize); 6] = match set {
            TrainingSet::M1 => [(10626, 10719), (6422, 6452), (0, 0), (0, 0), (0, 0), (0, 0)],
            TrainingSet::M2 => [(9590, 9485), (4613, 4465), (3441, 3469), (0, 0), (0, 0), (0, 0)],
            TrainingSet::M3 => [(7441, 7650), (4438, 4272), (2930, 2949), (2597, 2642), (0, 0), (0, 0)],
            TrainingSet::Mmax => [(2616, 2720), (3802, 3692), (2442, 2520), (2118, 2026), (1852, 1858), (1761, 1734)],
        };
        let cells = counts
            .iter()
            .enumerate()
            .filter(|(_, (t, f))| t + f > 0)
            .map(|(depth, &(true_count, false_count))| DepthCell { depth, true_count, false_count })
            .collect();
        DepthProfile { cells }
    }

    /// Every count multiplied by `factor` and rounded half away from zero.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |n: usize| (n as f64 * factor).round() as usize;
        DepthProfile {
            cells: self
                .cells
                .iter()
                .map(|c| DepthCell {
                    depth: c.depth,
                    true_count: scale(c.true_count),
                    false_count: scale(c.false_count),
                })
                .collect(),
        }
    }

    /// Proportional rescaling to exactly `total` instances (largest
    /// remainder rounding, ties to the earlier cell).
    pub fn scaled_to_total(&self, total: usize) -> Self {
        let current = self.total();
        if current == 0 {
            return self.clone();
        }
        let slots: Vec<usize> = self.cells.iter().flat_map(|c| [c.true_count, c.false_count]).collect();
        let exact: Vec<f64> = slots.iter().map(|&n| n as f64 * total as f64 / current as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let missing = total - counts.iter().sum::<usize>();
        for &i in order.iter().take(missing) {
            counts[i] += 1;
        }
        DepthProfile {
            cells: self
                .cells
                .iter()
                .enumerate()
                .map(|(i, c)| DepthCell { depth: c.depth, true_count: counts[2 * i], false_count: counts[2 * i + 1] })
                .collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.true_count + c.false_count).sum()
    }

    pub fn max_depth(&self) -> usize {
        self.cells.iter().map(|c| c.depth).max().unwrap_or(0)
    }
}

/// Gaussian draw for rule probabilities, clipped to [0, 1] and snapped to
/// the nearest adverb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySampler {
    pub mean: f64,
    pub std_dev: f64,
}

impl Default for ProbabilitySampler {
    fn default() -> Self {
        ProbabilitySampler { mean: 0.55, std_dev: 0.30 }
    }
}

/// Clips a raw draw into [0, 1] and snaps it to the nearest adverb.
pub fn snap_draw(draw: f64) -> (f64, Adverb) {
    let adverb = Adverb::nearest(draw.clamp(0.0, 1.0)).expect("clamped into range");
    (adverb.probability(), adverb)
}

impl ProbabilitySampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Adverb) {
        let normal = Normal::new(self.mean, self.std_dev).expect("validated std_dev");
        snap_draw(normal.sample(rng))
    }
}

pub fn sample_rule_probability<R: Rng + ?Sized>(sampler: &ProbabilitySampler, rng: &mut R) -> (f64, Adverb) {
    sampler.sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetStyle {
    /// Attribute rules with fresh adverbs per instance.
    RuleTakerPro,
    /// Family relations drawn from one global rule pool with fixed
    /// probabilities.
    RuleBert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub dataset: DatasetStyle,
    pub vocabulary: Vocabulary,
    pub entities: Vec<Entity>,
    pub max_depth: usize,
    pub profile: DepthProfile,
    pub sampler: ProbabilitySampler,
    pub style: RuleStyle,
    pub include_rules_in_text: bool,
    /// Share of Complex instances among depth ≥ 1 questions.
    pub complex_fraction: f64,
    /// Rejection attempts allowed per instance before giving up.
    pub attempt_budget: usize,
    pub seed: u64,
}

pub const DEFAULT_ENTITIES: [&str; 12] =
    ["Anne", "Bob", "Charlie", "Dave", "Erin", "Fiona", "Gary", "Harry", "David", "Ann", "Mike", "Sara"];

impl GenConfig {
    pub fn ruletaker_pro(profile: DepthProfile, seed: u64) -> Self {
        GenConfig {
            dataset: DatasetStyle::RuleTakerPro,
            vocabulary: Vocabulary::builtin(),
            entities: DEFAULT_ENTITIES.iter().map(|e| Entity::new(*e).expect("valid default entity")).collect(),
            max_depth: profile.max_depth(),
            profile,
            sampler: ProbabilitySampler::default(),
            style: RuleStyle::Adverb,
            include_rules_in_text: true,
            complex_fraction: 0.2,
            attempt_budget: 200_000,
            seed,
        }
    }

    pub fn rulebert(profile: DepthProfile, seed: u64) -> Self {
        GenConfig { dataset: DatasetStyle::RuleBert, style: RuleStyle::Bare, ..GenConfig::ruletaker_pro(profile, seed) }
    }

    pub fn validate(&self) -> Result<(), DataGenError> {
        let bad = |m: &str| Err(DataGenError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.sampler.mean) {
            return bad("sampler mean must lie in [0, 1]");
        }
        if !(self.sampler.std_dev.is_finite() && self.sampler.std_dev >= 0.0) {
            return bad("sampler std_dev must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.complex_fraction) {
            return bad("complex_fraction must lie in [0, 1]");
        }
        if self.profile.max_depth() > self.max_depth {
            return bad("profile asks for a depth above max_depth");
        }
        if self.entities.len() < 2 {
            return bad("at least two entities are needed");
        }
        if self.dataset == DatasetStyle::RuleBert && self.style == RuleStyle::Adverb {
            return bad("the relational rule pool has no adverbs; use numeric or bare style");
        }
        let attributes = self.vocabulary.attributes().count();
        if self.dataset == DatasetStyle::RuleTakerPro && attributes < 2 * self.max_depth + 4 {
            return bad("vocabulary has too few attributes for max_depth");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping_examples() {
        assert_eq!(snap_draw(0.87), (0.90, Adverb::Usually));
        assert_eq!(snap_draw(1.30), (1.00, Adverb::Always));
        assert_eq!(snap_draw(0.12), (0.15, Adverb::Seldom));
        assert_eq!(snap_draw(-0.4), (0.0, Adverb::Never));
    }

    #[test]
    fn table_profile_scaled_by_one_hundredth() {
        let p = DepthProfile::ruletaker_pro(TrainingSet::Mmax).scaled(0.01);
        let counts: Vec<(usize, usize)> = p.cells.iter().map(|c| (c.true_count, c.false_count)).collect();
        assert_eq!(counts, vec![(26, 27), (38, 37), (24, 25), (21, 20), (19, 19), (18, 17)]);
        assert_eq!(p.total(), 291);
    }

    #[test]
    fn scaled_to_total_is_exact() {
        let p = DepthProfile::ruletaker_pro(TrainingSet::M3).scaled_to_total(500);
        assert_eq!(p.total(), 500);
        assert_eq!(p.max_depth(), 3);
        assert_eq!(DepthProfile::default().scaled_to_total(10).total(), 0);
    }

    #[test]
    fn validation() {
        let mut cfg = GenConfig::ruletaker_pro(DepthProfile::ruletaker_pro(TrainingSet::M2), 1);
        assert!(cfg.validate().is_ok());
        cfg.sampler.mean = 1.5;
        assert!(cfg.validate().is_err());
        let cfg = GenConfig { style: RuleStyle::Adverb, ..GenConfig::rulebert(DepthProfile::default(), 1) };
        assert!(cfg.validate().is_err());
    }
}
