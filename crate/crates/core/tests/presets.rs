//! The shipped config presets must parse to the built-in reference rigs.

use omnistereo::rig::{load_spec, RigSpec};

fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn big_rig_preset_matches_builtin() {
    let spec = load_spec(config_path("big_rig.cfg")).unwrap();
    assert_eq!(spec, RigSpec::big_rig());
}

#[test]
fn small_rig_preset_matches_builtin() {
    let spec = load_spec(config_path("small_rig.cfg")).unwrap();
    assert_eq!(spec, RigSpec::small_rig());
}
