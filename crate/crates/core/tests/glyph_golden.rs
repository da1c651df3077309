//! SVG export against a checked-in golden file. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test -p camscope-core --test glyph_golden`.

use std::path::PathBuf;

use camscope_core::aggregate::{AggregatedCam, AggregationMethod, VariabilityMethod};
use camscope_core::glyph::{render_svg, GridSpec};

fn fixture() -> AggregatedCam {
    let impact = (0..1500).map(|i| ((i * 37 % 201) as f64 - 100.0) / 100.0).collect();
    let variability = (0..1500).map(|i| (i % 11) as f64 / 10.0).map(|v: f64| v.min(1.0)).collect();
    AggregatedCam {
        class_index: 2,
        n_samples: 40,
        agg_method: AggregationMethod::Mean,
        var_method: VariabilityMethod::Entropy,
        impact,
        variability,
    }
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/glyph_1500.svg")
}

#[test]
fn matches_golden_file() {
    let svg = render_svg(&fixture(), &GridSpec::default()).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_path().parent().unwrap()).unwrap();
        std::fs::write(golden_path(), &svg).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path()).expect("golden file present");
    assert!(svg == golden, "SVG output drifted from tests/golden/glyph_1500.svg");
}

#[test]
fn golden_file_encodes_the_grid() {
    let golden = std::fs::read_to_string(golden_path()).expect("golden file present");
    let rects: Vec<&str> = golden.lines().filter(|l| l.starts_with("<rect")).collect();
    assert_eq!(rects.len(), 1500);
    assert!(golden.starts_with(r#"<svg xmlns="http://www.w3.org/2000/svg" width="1500" height="100""#));

    let cam = fixture();
    let attr = |line: &str, name: &str| -> String {
        let start = line.find(&format!(" {name}=\"")).unwrap() + name.len() + 3;
        line[start..].split('"').next().unwrap().to_string()
    };
    let mut rows = std::collections::BTreeSet::new();
    for (i, line) in rects.iter().enumerate() {
        let side: f64 = attr(line, "width").parse().unwrap();
        let y: f64 = attr(line, "y").parse().unwrap();
        rows.insert(((y + side / 2.0) / 10.0).floor() as usize);
        if cam.impact[i] == 0.0 {
            assert_eq!(attr(line, "fill"), "#f7f7f7", "feature {i}");
        }
        if cam.impact[i] == 1.0 {
            assert_eq!(attr(line, "fill"), "#b40426");
        }
        if cam.impact[i] == -1.0 {
            assert_eq!(attr(line, "fill"), "#3b4cc0");
        }
        if cam.variability[i] == 0.0 {
            assert_eq!(side, 10.0, "feature {i}");
        }
        if cam.variability[i] == 1.0 {
            assert!((side - 2.0).abs() < 1e-4, "feature {i}: side {side}");
        }
        assert!(line.contains(&format!("<title>feature {i}:")));
    }
    assert_eq!(rows.len(), 10);
}
