//! Reporting for the acceptance run in `tests/acceptance.rs`.

use std::fmt;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub criterion: u32,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(criterion: u32, pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            criterion,
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "criterion {}: {verdict} {}", self.criterion, self.detail)
    }
}

/// Criteria named on the command line, or all of `1..=last`.
pub fn selected(args: impl IntoIterator<Item = String>, last: u32) -> Vec<u32> {
    let picked: Vec<u32> = args.into_iter().filter_map(|a| a.parse().ok()).collect();
    if picked.is_empty() {
        (1..=last).collect()
    } else {
        picked
    }
}
