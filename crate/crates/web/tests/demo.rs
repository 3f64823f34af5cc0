use conewave_web::*;

#[test]
fn slices_are_square_rgba() {
    for (kind, k) in [("random-red", 0), ("packets", 2), ("bump", 0), ("tube", 3), ("train", 1)] {
        let img = slice_rgba(kind, k, 0.5, 1).unwrap();
        let side = ((img.len() / 4) as f64).sqrt() as usize;
        assert_eq!(side * side * 4, img.len(), "{kind}");
        assert!(side <= 256);
        assert!(img.chunks(4).all(|p| p[3] == 255));
        assert!(img.chunks(4).any(|p| p[0] > 0), "{kind} is blank");
    }
}

#[test]
fn tube_slices_show_the_outline() {
    let img = slice_rgba("tube", 1, 0.0, 1).unwrap();
    assert!(img.chunks(4).any(|p| p == [0, 255, 255, 255]));
}

#[test]
fn bad_inputs_are_errors() {
    assert!(slice_rgba("triangle", 0, 0.0, 1).is_err());
    assert!(cover_json(1, 10, 2.0, 1).is_err());
    assert!(extract_json(0, 0.2, 1.1).is_err());
}

#[test]
fn cover_json_fields() {
    let v: serde_json::Value = serde_json::from_str(&cover_json(1, 60, 0.25, 3).unwrap()).unwrap();
    assert_eq!(v["family"].as_array().unwrap().len(), 60);
    assert!(v["residual"].as_f64().unwrap() <= 0.25);
    assert!(v["classes"].as_array().unwrap().len() <= 8);
}

#[test]
fn extraction_trace_fields() {
    let v: serde_json::Value = serde_json::from_str(&extract_json(1, 0.3, 4.0).unwrap()).unwrap();
    let steps = v["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    assert_eq!(v["partial"], false);
    assert!(v["remainder_concentration"].as_f64().unwrap() < v["threshold"].as_f64().unwrap());
    let mut prev = v["mass"].as_f64().unwrap();
    for s in steps {
        let after = s["mass_after"].as_f64().unwrap();
        assert!(after < prev);
        prev = after;
    }
}
