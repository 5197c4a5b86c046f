use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::codes::{CategoryCode, CorrectnessCode, GoalCode};
use super::coding::CodedPrompt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub success: usize,
    pub out_of_scope: usize,
    pub intent_error: usize,
    pub technical_error: usize,
}

impl Counts {
    pub fn add(&mut self, code: CorrectnessCode) {
        match code {
            CorrectnessCode::Success => self.success += 1,
            CorrectnessCode::OutOfScopeAck => self.out_of_scope += 1,
            CorrectnessCode::IntentError => self.intent_error += 1,
            CorrectnessCode::TechnicalError => self.technical_error += 1,
        }
    }

    pub fn get(&self, code: CorrectnessCode) -> usize {
        match code {
            CorrectnessCode::Success => self.success,
            CorrectnessCode::OutOfScopeAck => self.out_of_scope,
            CorrectnessCode::IntentError => self.intent_error,
            CorrectnessCode::TechnicalError => self.technical_error,
        }
    }

    pub fn failed(&self) -> usize {
        self.intent_error + self.technical_error
    }

    pub fn total(&self) -> usize {
        self.success + self.out_of_scope + self.failed()
    }
}

/// `n / total` as a percentage in tenths, rounded half up with integer
/// arithmetic so the result never depends on float formatting.
pub fn percent_tenths(n: usize, total: usize) -> u64 {
    if total == 0 {
        return 0;
    }
    let (n, total) = (n as u64, total as u64);
    (n * 2000 + total) / (2 * total)
}

/// One-decimal percentage string, e.g. "75.3".
pub fn percent(n: usize, total: usize) -> String {
    let t = percent_tenths(n, total);
    format!("{}.{}", t / 10, t % 10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyReport {
    pub overall: Counts,
    pub per_category: BTreeMap<CategoryCode, Counts>,
    pub per_goal: BTreeMap<GoalCode, usize>,
    /// Prompts with more than one category.
    pub multi_label_prompts: usize,
    /// Category rows sum to the total plus this.
    pub multi_label_overcount: usize,
}

pub const CSV_HEADER: &str = "category,success,out_of_scope,intent_error,technical_error,total";

impl TallyReport {
    pub fn total(&self) -> usize {
        self.overall.total()
    }

    /// Category rows in fixed order, then an `all` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let row = |out: &mut String, name: &str, c: &Counts| {
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{}",
                c.success,
                c.out_of_scope,
                c.intent_error,
                c.technical_error,
                c.total()
            );
        };
        for cat in CategoryCode::ALL {
            if let Some(c) = self.per_category.get(&cat) {
                row(&mut out, cat.key(), c);
            }
        }
        row(&mut out, "all", &self.overall);
        out
    }

    pub fn summary(&self) -> String {
        let o = &self.overall;
        let n = o.total();
        let mut out = String::new();
        let _ = writeln!(out, "{n} coded prompts");
        let _ = writeln!(out, "success: {} ({}%)", o.success, percent(o.success, n));
        let _ = writeln!(out, "out_of_scope: {} ({}%)", o.out_of_scope, percent(o.out_of_scope, n));
        let _ = writeln!(out, "failed: {} ({}%)", o.failed(), percent(o.failed(), n));
        let _ = writeln!(out, "  intent_error: {} ({}%)", o.intent_error, percent(o.intent_error, n));
        let _ = writeln!(
            out,
            "  technical_error: {} ({}%)",
            o.technical_error,
            percent(o.technical_error, n)
        );
        let _ = writeln!(
            out,
            "multi-label prompts: {} (category overcount {})",
            self.multi_label_prompts, self.multi_label_overcount
        );
        out
    }
}

pub fn tally(coded: &[CodedPrompt]) -> TallyReport {
    let mut overall = Counts::default();
    let mut per_category: BTreeMap<CategoryCode, Counts> = BTreeMap::new();
    let mut per_goal: BTreeMap<GoalCode, usize> = BTreeMap::new();
    let mut multi = 0;
    let mut labels = 0;
    for c in coded {
        overall.add(c.correctness);
        *per_goal.entry(c.goal).or_default() += 1;
        let cats: BTreeSet<CategoryCode> = if c.categories.is_empty() {
            BTreeSet::from([CategoryCode::Other])
        } else {
            c.categories.clone()
        };
        if cats.len() > 1 {
            multi += 1;
        }
        labels += cats.len();
        for cat in cats {
            per_category.entry(cat).or_default().add(c.correctness);
        }
    }
    TallyReport {
        overall,
        per_category,
        per_goal,
        multi_label_prompts: multi,
        multi_label_overcount: labels - coded.len(),
    }
}

/// A coded log with the given outcome counts, cycling through the ten named
/// categories. Used as a fixture for the tally arithmetic.
pub fn synthetic_log(counts: Counts) -> Vec<CodedPrompt> {
    let codes = CorrectnessCode::ALL
        .into_iter()
        .flat_map(|code| std::iter::repeat_n(code, counts.get(code)));
    codes
        .enumerate()
        .map(|(i, correctness)| CodedPrompt {
            index: i,
            user_input: format!("prompt {i}"),
            categories: BTreeSet::from([CategoryCode::ALL[i % 10]]),
            goal: GoalCode::ALL[i % 8],
            correctness,
            diagnostic: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn study_split() {
        let log = synthetic_log(Counts {
            success: 253,
            out_of_scope: 9,
            intent_error: 14,
            technical_error: 60,
        });
        let r = tally(&log);
        let n = r.total();
        assert_eq!(n, 336);
        assert_eq!(percent(r.overall.success, n), "75.3");
        assert_eq!(percent(r.overall.out_of_scope, n), "2.7");
        assert_eq!(percent(r.overall.failed(), n), "22.0");
    }

    #[test]
    fn single_success() {
        let r = tally(&synthetic_log(Counts {
            success: 1,
            ..Counts::default()
        }));
        assert_eq!(percent(r.overall.success, r.total()), "100.0");
    }

    #[test]
    fn four_entry_log() {
        let r = tally(&synthetic_log(Counts {
            success: 2,
            out_of_scope: 0,
            intent_error: 1,
            technical_error: 1,
        }));
        let n = r.total();
        let got: Vec<String> = CorrectnessCode::ALL
            .iter()
            .map(|c| percent(r.overall.get(*c), n))
            .collect();
        assert_eq!(got, vec!["50.0", "0.0", "25.0", "25.0"]);
    }

    #[test]
    fn csv_and_overcount() {
        let mut log = synthetic_log(Counts {
            success: 2,
            technical_error: 1,
            ..Counts::default()
        });
        log[0].categories.insert(CategoryCode::ObjectSize);
        let r = tally(&log);
        assert_eq!(r.multi_label_prompts, 1);
        assert_eq!(r.multi_label_overcount, 1);
        let row_total: usize = r.per_category.values().map(|c| c.total()).sum();
        assert_eq!(row_total, r.total() + r.multi_label_overcount);
        let csv = r.to_csv();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv.lines().last().unwrap(), "all,2,0,0,1,3");
        assert!(csv.contains("object_size,1,0,0,0,1"));
    }

    #[test]
    fn rounding_oracle() {
        // independent check through decimal strings
        for (n, total, want) in [(1, 3, "33.3"), (2, 3, "66.7"), (1, 8, "12.5"), (1, 16, "6.3"), (0, 5, "0.0")] {
            assert_eq!(percent(n, total), want);
        }
    }

    proptest! {
        #[test]
        fn percentages_sum_to_100(s in 0usize..400, o in 0usize..400, i in 0usize..400, t in 0usize..400) {
            prop_assume!(s + o + i + t > 0);
            let counts = Counts { success: s, out_of_scope: o, intent_error: i, technical_error: t };
            let n = counts.total();
            let sum: u64 = CorrectnessCode::ALL.iter().map(|c| percent_tenths(counts.get(*c), n)).sum();
            prop_assert!((998..=1002).contains(&sum), "sum {sum}");
        }

        #[test]
        fn tenths_match_exact_rounding(n in 0usize..10_000, extra in 1usize..10_000) {
            let total = n + extra;
            let exact = (n as f64) * 1000.0 / (total as f64);
            let t = percent_tenths(n, total) as f64;
            prop_assert!((t - exact).abs() <= 0.5 + 1e-9);
        }
    }
}
