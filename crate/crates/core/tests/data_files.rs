use std::path::PathBuf;

use coinforge::factory::{
    load_envelope, write_envelope, IdentityEnvelope, Schedule, SquareEnvelope,
};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data/envelopes")
        .join(name)
}

#[test]
fn shipped_files_match_writer() {
    let p2 = write_envelope(&SquareEnvelope::new(Schedule::PowersOfTwo), 256).unwrap();
    assert_eq!(std::fs::read_to_string(data("p2.env")).unwrap(), p2);
    let id = write_envelope(&IdentityEnvelope::new(Schedule::PowersOfTwo), 64).unwrap();
    assert_eq!(std::fs::read_to_string(data("identity.env")).unwrap(), id);
}

#[test]
fn shipped_files_load() {
    assert!(load_envelope(&data("p2.env")).is_ok());
    assert!(load_envelope(&data("identity.env")).is_ok());
}
