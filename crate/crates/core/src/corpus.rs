//! Bundled argument fragments and configuration defaults.

pub const SCOPING: &str = include_str!("../corpus/gsn/scoping.gsn");
pub const REQUIREMENTS: &str = include_str!("../corpus/gsn/requirements.gsn");
pub const DATA: &str = include_str!("../corpus/gsn/data.gsn");
pub const LEARNING: &str = include_str!("../corpus/gsn/learning.gsn");
pub const VERIFICATION: &str = include_str!("../corpus/gsn/verification.gsn");
pub const DEPLOYMENT: &str = include_str!("../corpus/gsn/deployment.gsn");

pub const DETECTOR_DEFAULTS: &str = include_str!("../corpus/detector_defaults.json");

/// Fragment slots in assembly order.
pub const FRAGMENT_SLOTS: [&str; 6] = [
    "scoping",
    "requirements",
    "data",
    "learning",
    "verification",
    "deployment",
];

/// The five stage fragments plus the scoping claim, keyed by slot name.
pub fn fragments() -> [(&'static str, &'static str); 6] {
    [
        ("scoping", SCOPING),
        ("requirements", REQUIREMENTS),
        ("data", DATA),
        ("learning", LEARNING),
        ("verification", VERIFICATION),
        ("deployment", DEPLOYMENT),
    ]
}

pub fn fragment(slot: &str) -> Option<&'static str> {
    fragments().into_iter().find(|(s, _)| *s == slot).map(|(_, src)| src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsn::{check_source, parse_argument};
    use crate::Severity;

    #[test]
    fn every_bundled_fragment_is_error_free() {
        for (slot, src) in fragments() {
            let findings = check_source(src);
            assert!(
                findings.iter().all(|f| f.severity != Severity::Error),
                "{slot}: {findings:?}"
            );
            parse_argument(src).unwrap();
        }
        assert!(fragment("learning").is_some());
        assert!(fragment("nope").is_none());
    }
}
