use proptest::prelude::*;
use relucid::core::cnet::{extract_cnet_ruleset, CnetOptions};
use relucid::core::data::generate_p2;
use relucid::core::ecdt::{extract_ruleset, EcdtOptions};
use relucid::core::trainer::random_network;
use relucid::format::{parse_model, parse_ruleset, serialize_model, serialize_ruleset};

proptest! {
    #[test]
    fn model_round_trip(seed in 0u64..10_000, out in 1usize..4) {
        let m = random_network(3, &[4, 2], out, seed).unwrap();
        let text = serialize_model(&m, None);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(serialize_model(&back, None), text);
    }

    #[test]
    fn ruleset_round_trip(seed in 0u64..10_000) {
        let m = random_network(2, &[3, 2], 1 + (seed % 3) as usize, seed).unwrap();
        let rs = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
        let text = serialize_ruleset(&rs);
        prop_assert_eq!(&text, &serialize_ruleset(&rs));
        prop_assert_eq!(parse_ruleset(&text).unwrap(), rs);
    }
}

#[test]
fn label_rule_set_round_trip() {
    let m = random_network(2, &[3, 3], 1, 2).unwrap();
    let d = generate_p2(300, 1).unwrap();
    let rs = extract_cnet_ruleset(&m, &d, &CnetOptions::default()).unwrap().ruleset;
    assert_eq!(parse_ruleset(&serialize_ruleset(&rs)).unwrap(), rs);
}

#[test]
fn malformed_documents_rejected() {
    let empty = r#"{"kind":"udt","input_dim":1,"class_count":2,"default_class":0,"rules":[]}"#;
    assert!(parse_ruleset(empty).is_err());
    let bad_op = r#"{"kind":"udt","input_dim":1,"class_count":2,"default_class":0,"rules":[
        {"id":0,"constraints":[{"coeffs":[1.0],"op":"GE","rhs":0.0}],"consequence":{"type":"label","label":0}}]}"#;
    assert!(parse_ruleset(bad_op).is_err());
    let ok = bad_op.replace("GE", "GT");
    assert_eq!(parse_ruleset(&ok).unwrap().len(), 1);
    assert!(parse_ruleset("{").is_err());
    assert!(parse_model(r#"{"input_dim":1,"layers":[]}"#).is_err());
    let unknown = r#"{"input_dim":1,"layers":[{"weights":[[1.0]],"biases":[0.0],"activation":"tanh"},
        {"weights":[[1.0]],"biases":[0.0],"activation":"linear"}]}"#;
    assert!(parse_model(unknown).is_err());
    let ragged = r#"{"input_dim":2,"layers":[{"weights":[[1.0],[1.0, 2.0]],"biases":[0.0],"activation":"relu"},
        {"weights":[[1.0]],"biases":[0.0],"activation":"linear"}]}"#;
    assert!(parse_model(ragged).is_err());
}

#[test]
fn model_document_layout() {
    let text = r#"{"input_dim":2,"layers":[
        {"weights":[[1,1],[1,1]],"biases":[0,-1],"activation":"relu"},
        {"weights":[[1],[-2]],"biases":[0],"activation":"linear"}],
        "metadata":{"note":"xor"}}"#;
    let m = parse_model(text).unwrap();
    assert_eq!(m.predict(&[1.0, 0.0]).unwrap(), 1);
    let out = serialize_model(&m, None);
    assert!(out.contains("\"weights\": [[1.0000000000000000e0,1.0000000000000000e0]"));
}
