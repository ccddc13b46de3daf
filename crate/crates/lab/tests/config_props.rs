use abclab::config::{ExperimentConfig, KEYS};
use proptest::prelude::*;

fn default_lines() -> Vec<String> {
    ExperimentConfig::default().to_text().lines().map(str::to_string).collect()
}

proptest! {
    #[test]
    fn hash_is_stable_under_reordering(perm in Just(default_lines()).prop_shuffle(), pad in 0usize..3) {
        let text = perm.iter().map(|l| format!("{}{l}\n", " ".repeat(pad))).collect::<String>();
        let c = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(c.hash(), ExperimentConfig::default().hash());
        prop_assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn hash_tracks_every_hashed_key(i in 0..KEYS.len()) {
        let (k, _, _) = KEYS[i];
        let alt = match k {
            "surface" => "sphere",
            "deform" => "false",
            "eta" => "0.04",
            "eps" => "0.25",
            "amp_ratio" => "0.25",
            "flow_tol" => "1e-14",
            "out" => "elsewhere",
            "stages" => "5",
            "quad_n" => "128",
            _ => "77",
        };
        let c = ExperimentConfig::parse(&format!("{k} = {alt}")).unwrap();
        let same = matches!(k, "out" | "stages");
        prop_assert_eq!(c.hash() == ExperimentConfig::default().hash(), same);
    }
}
