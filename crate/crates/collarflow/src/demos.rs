//! Demo experiments shipped with the binary.

use crate::config::ExperimentConfig;

pub const DEMOS: [(&str, &str); 3] = [
    ("wrap", include_str!("../demos/wrap.json")),
    ("radial-pinch", include_str!("../demos/radial-pinch.json")),
    ("sphere", include_str!("../demos/sphere.json")),
];

pub fn demo(name: &str) -> Option<ExperimentConfig> {
    DEMOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ExperimentConfig::from_json(text).expect("shipped demo parses"))
}

pub fn names() -> impl Iterator<Item = &'static str> {
    DEMOS.iter().map(|(n, _)| *n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demos_parse_and_resolve() {
        for name in names() {
            let c = demo(name).unwrap();
            c.flow.flow_config().unwrap();
        }
    }
}
