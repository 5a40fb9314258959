//! Experiment files bundled into the binary, one per reproduced figure.

pub const PRESETS: &[(&str, &str)] = &[
    ("figure1", include_str!("../presets/figure1.toml")),
    ("figure2", include_str!("../presets/figure2.toml")),
    ("figure5", include_str!("../presets/figure5.toml")),
    ("figure6", include_str!("../presets/figure6.toml")),
    ("figure7", include_str!("../presets/figure7.toml")),
    ("figure8", include_str!("../presets/figure8.toml")),
    ("figure9", include_str!("../presets/figure9.toml")),
    ("figure10", include_str!("../presets/figure10.toml")),
    ("figure11", include_str!("../presets/figure11.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
