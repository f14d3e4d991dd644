//! Bundled experiment presets, one per stability or instability result.

pub const PRESETS: &[(&str, &str)] = &[
    ("prop-2Dprop", include_str!("../presets/prop-2Dprop.json")),
    ("prop-nil", include_str!("../presets/prop-nil.json")),
    ("prop-Gallprop", include_str!("../presets/prop-Gallprop.json")),
    ("prop-one", include_str!("../presets/prop-one.json")),
    ("prop-tthree", include_str!("../presets/prop-tthree.json")),
    ("prop-2dim", include_str!("../presets/prop-2dim.json")),
    ("prop-nprop", include_str!("../presets/prop-nprop.json")),
    ("prop-exscal", include_str!("../presets/prop-exscal.json")),
    ("prop-prodprop", include_str!("../presets/prop-prodprop.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Config;

    #[test]
    fn nine_presets_that_parse() {
        assert_eq!(PRESETS.len(), 9);
        for (name, text) in PRESETS {
            Config::parse(name, text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(get("prop-nil").is_some() && get("nope").is_none());
    }
}
