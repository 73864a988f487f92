mod common;

use claw::corpus::{parse_document, print_document};
use claw::error::Error;
use common::{load, CORPUS};

const HEADER: &str = "[system]\nname = s\nindep = t, x\ndep = u\neq.G = u_t + u_xxx\nlead.G = u_xxx\n";

#[test]
fn gkdv_inventory() {
    let doc = load("gkdv");
    assert_eq!(doc.system.name, "gKdV");
    assert_eq!(doc.symmetries.len(), 4);
    assert_eq!(doc.multipliers.len(), 5);
    assert_eq!(doc.currents.len(), 5);
}

#[test]
fn jet_letters_are_canonicalized() {
    let a = parse_document(&format!("{HEADER}[current]\nname = A\nT = \"u_xt\"\nX.x = 0\n")).unwrap();
    let b = parse_document(&format!("{HEADER}[current]\nname = A\nT = u_tx\nX.x = 0\n")).unwrap();
    assert_eq!(a.currents[0].current, b.currents[0].current);
}

#[test]
fn empty_derivative_suffix_is_a_parse_error() {
    let err = parse_document(&format!("{HEADER}[multiplier]\nname = Q\nQ.G = u_^2\n")).unwrap_err();
    assert!(matches!(err, Error::ParseError { .. }), "{err:?}");
}

#[test]
fn duplicate_item_names_are_rejected() {
    let text = format!("{HEADER}[multiplier]\nname = Q\nQ.G = 1\n[multiplier]\nname = Q\nQ.G = u\n");
    assert!(parse_document(&text).is_err());
}

#[test]
fn printing_round_trips_every_corpus_file() {
    for name in CORPUS {
        let doc = load(name);
        let printed = print_document(&doc);
        let again = parse_document(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(again, doc, "{name}");
    }
}
