use serde::{Deserialize, Serialize};

use super::ModelError;

pub const FUZZY_FORMAT: &str = "fuzzy-system v1";

/// Membership functions per input variable (low / medium / high).
pub const TERMS: usize = 3;

/// Triangular membership function with vertices `a <= b <= c`.
///
/// A degenerate side is a shoulder: `a == b` gives full membership for every
/// `x <= b`, `b == c` for every `x >= b`. A fully collapsed triangle is
/// therefore the universal set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Triangle {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Triangle { a, b, c }
    }

    #[inline]
    pub fn membership(&self, x: f64) -> f64 {
        let Triangle { a, b, c } = *self;
        if x == b {
            1.0
        } else if x < b {
            if a == b {
                1.0
            } else if x <= a {
                0.0
            } else {
                (x - a) / (b - a)
            }
        } else if b == c {
            1.0
        } else if x >= c {
            0.0
        } else {
            (c - x) / (c - b)
        }
    }

    /// Open interval on which membership is positive; shoulders extend to
    /// infinity.
    pub fn support(&self) -> (f64, f64) {
        let lo = if self.a < self.b { self.a } else { f64::NEG_INFINITY };
        let hi = if self.b < self.c { self.c } else { f64::INFINITY };
        (lo, hi)
    }
}

/// True when every x in [0,1] has positive membership in some function.
pub fn covers_unit_interval(mfs: &[Triangle]) -> bool {
    let mut spans: Vec<(f64, f64)> = mfs.iter().map(Triangle::support).collect();
    spans.sort_by(|p, q| p.0.total_cmp(&q.0));
    let Some(&(first_lo, mut reach)) = spans.first() else {
        return false;
    };
    if first_lo >= 0.0 {
        return false;
    }
    for &(lo, hi) in &spans[1..] {
        if reach > 1.0 {
            break;
        }
        if lo >= reach {
            return false;
        }
        reach = reach.max(hi);
    }
    reach > 1.0
}

/// Makes the three functions of one input cover [0,1] by moving outer
/// vertices only onto existing vertex values:
///
/// * no left shoulder: the leftmost-peaked function gets `a = b`;
/// * no right shoulder: the rightmost-peaked function gets `c = b`;
/// * a gap between the reach of the functions so far and the next one's
///   support: the function holding the reach stretches `c` to the next
///   function's peak.
pub fn repair_coverage(mfs: &mut [Triangle; TERMS]) {
    let by_peak = {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| mfs[i].b.total_cmp(&mfs[j].b));
        idx
    };
    if !mfs.iter().any(|m| m.a == m.b) {
        let m = &mut mfs[by_peak[0]];
        m.a = m.b;
    }
    if !mfs.iter().any(|m| m.b == m.c) {
        let m = &mut mfs[by_peak[TERMS - 1]];
        m.c = m.b;
    }
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| mfs[i].support().0.total_cmp(&mfs[j].support().0));
    let mut holder = order[0];
    let mut reach = mfs[holder].support().1;
    for &i in &order[1..] {
        let (lo, hi) = mfs[i].support();
        if lo >= reach {
            mfs[holder].c = mfs[i].b;
        }
        if hi >= reach {
            holder = i;
            reach = hi;
        }
    }
    debug_assert!(covers_unit_interval(mfs));
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzyRule {
    /// One term index (0..3) per input.
    pub antecedent: Vec<u8>,
    pub consequent: f64,
}

/// Zero-order Sugeno system: triangular antecedents, singleton consequents,
/// min conjunction and weighted-average defuzzification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzySystem {
    pub input_count: usize,
    pub mfs: Vec<[Triangle; TERMS]>,
    pub rules: Vec<FuzzyRule>,
}

impl FuzzySystem {
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |m: String| Err(ModelError::Invalid(m));
        if self.mfs.len() != self.input_count {
            return invalid(format!("{} membership sets for {} inputs", self.mfs.len(), self.input_count));
        }
        for (i, set) in self.mfs.iter().enumerate() {
            for t in set {
                let ordered = 0.0 <= t.a && t.a <= t.b && t.b <= t.c && t.c <= 1.0;
                if !ordered {
                    return invalid(format!(
                        "input {i}: triangle ({}, {}, {}) not ordered within [0,1]",
                        t.a, t.b, t.c
                    ));
                }
            }
            if !covers_unit_interval(set) {
                return invalid(format!("input {i}: membership functions leave part of [0,1] uncovered"));
            }
        }
        if self.rules.is_empty() {
            return invalid("rule list is empty".into());
        }
        for (r, rule) in self.rules.iter().enumerate() {
            if rule.antecedent.len() != self.input_count {
                return invalid(format!("rule {r} has {} antecedents", rule.antecedent.len()));
            }
            if rule.antecedent.iter().any(|&t| usize::from(t) >= TERMS) {
                return invalid(format!("rule {r} references a term outside 0..{TERMS}"));
            }
            if !(0.0..=1.0).contains(&rule.consequent) {
                return invalid(format!("rule {r} consequent {} outside [0,1]", rule.consequent));
            }
        }
        Ok(())
    }

    pub fn infer(&self, inputs: &[f64]) -> Result<f64, ModelError> {
        if inputs.len() != self.input_count {
            return Err(ModelError::Arity { expected: self.input_count, got: inputs.len() });
        }
        if let Some(&x) = inputs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(ModelError::InputRange(x));
        }
        let grades: Vec<[f64; TERMS]> =
            self.mfs.iter().zip(inputs).map(|(set, &x)| set.map(|t| t.membership(x))).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for rule in &self.rules {
            let strength = rule.antecedent.iter().zip(&grades).map(|(&t, g)| g[usize::from(t)]).fold(1.0, f64::min);
            num += strength * rule.consequent;
            den += strength;
        }
        Ok(if den > 0.0 { num / den } else { 0.5 })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&FuzzyDocRef { format: FUZZY_FORMAT, system: self }).expect("system serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: FuzzyDoc = serde_json::from_str(text)?;
        if doc.format != FUZZY_FORMAT {
            return Err(ModelError::Format(format!("expected `{FUZZY_FORMAT}`, found `{}`", doc.format)));
        }
        doc.system.validate()?;
        Ok(doc.system)
    }
}

#[derive(Serialize)]
struct FuzzyDocRef<'a> {
    format: &'a str,
    system: &'a FuzzySystem,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FuzzyDoc {
    format: String,
    system: FuzzySystem,
}

pub fn fuzzy_infer(fs: &FuzzySystem, inputs: &[f64]) -> Result<f64, ModelError> {
    fs.infer(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn low_mid_high() -> [Triangle; 3] {
        [Triangle::new(0.0, 0.0, 0.5), Triangle::new(0.0, 0.5, 1.0), Triangle::new(0.5, 1.0, 1.0)]
    }

    fn one_input(consequents: [f64; 3]) -> FuzzySystem {
        FuzzySystem {
            input_count: 1,
            mfs: vec![low_mid_high()],
            rules: (0..3).map(|t| FuzzyRule { antecedent: vec![t as u8], consequent: consequents[t] }).collect(),
        }
    }

    #[test]
    fn membership_conventions() {
        let t = Triangle::new(0.2, 0.5, 0.6);
        assert_eq!(t.membership(0.5), 1.0);
        assert_eq!(t.membership(0.2), 0.0);
        assert_eq!(t.membership(0.1), 0.0);
        assert!((t.membership(0.35) - 0.5).abs() < 1e-15);
        assert!((t.membership(0.55) - 0.5).abs() < 1e-12);
        assert_eq!(t.membership(0.7), 0.0);
        let left = Triangle::new(0.3, 0.3, 0.6);
        assert_eq!(left.membership(0.0), 1.0);
        let right = Triangle::new(0.3, 0.6, 0.6);
        assert_eq!(right.membership(1.0), 1.0);
        let point = Triangle::new(0.0, 0.0, 0.0);
        assert_eq!(point.membership(0.7), 1.0);
    }

    #[test]
    fn rule_at_peak_returns_its_consequent() {
        let fs = FuzzySystem {
            input_count: 1,
            mfs: vec![low_mid_high()],
            rules: vec![FuzzyRule { antecedent: vec![1], consequent: 0.8 }],
        };
        fs.validate().unwrap();
        assert_eq!(fuzzy_infer(&fs, &[0.5]).unwrap(), 0.8);
    }

    #[test]
    fn equal_strengths_average_consequents() {
        let fs = one_input([0.2, 0.6, 0.9]);
        // x = 0.25: low and mid both at 0.5, high at 0
        assert!((fuzzy_infer(&fs, &[0.25]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn no_firing_rule_means_undecided() {
        let fs = FuzzySystem {
            input_count: 1,
            mfs: vec![low_mid_high()],
            rules: vec![FuzzyRule { antecedent: vec![2], consequent: 0.9 }],
        };
        assert_eq!(fuzzy_infer(&fs, &[0.1]).unwrap(), 0.5);
    }

    #[test]
    fn identity_witness_is_exact() {
        let fs = one_input([0.0, 0.5, 1.0]);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((fuzzy_infer(&fs, &[x]).unwrap() - x).abs() < 1e-15);
        }
    }

    #[test]
    fn arity_and_range_errors() {
        let fs = one_input([0.0, 0.5, 1.0]);
        assert!(matches!(fuzzy_infer(&fs, &[0.1, 0.2]), Err(ModelError::Arity { expected: 1, got: 2 })));
        assert!(matches!(fuzzy_infer(&fs, &[1.2]), Err(ModelError::InputRange(_))));
    }

    #[test]
    fn coverage_check_and_repair() {
        assert!(covers_unit_interval(&low_mid_high()));
        let mut gappy = [Triangle::new(0.0, 0.1, 0.2), Triangle::new(0.4, 0.5, 0.6), Triangle::new(0.8, 0.9, 1.0)];
        assert!(!covers_unit_interval(&gappy));
        repair_coverage(&mut gappy);
        assert!(covers_unit_interval(&gappy));
        assert_eq!(gappy, [Triangle::new(0.1, 0.1, 0.5), Triangle::new(0.4, 0.5, 0.9), Triangle::new(0.8, 0.9, 0.9)]);

        let mut fine = low_mid_high();
        repair_coverage(&mut fine);
        assert_eq!(fine, low_mid_high());
    }

    #[test]
    fn touching_supports_leave_a_hole() {
        // open supports (-inf, 0.4) and (0.4, inf) miss the point 0.4
        let sets = [Triangle::new(0.0, 0.0, 0.4), Triangle::new(0.4, 0.7, 0.7), Triangle::new(0.9, 0.95, 1.0)];
        assert!(!covers_unit_interval(&sets));
    }

    #[test]
    fn json_round_trip() {
        let fs = one_input([0.1, 1.0 / 3.0, 0.7]);
        let back = FuzzySystem::from_json(&fs.to_json()).unwrap();
        assert_eq!(back, fs);
    }
}
