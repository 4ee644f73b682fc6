use hproj::regression::{ball_halfspace_ten, mixed_five, regression_set};
use hproj_cli::schema::{self, ProblemFile, SetSpec};

#[test]
fn regression_problems_round_trip_bitwise() {
    for case in regression_set() {
        let file = ProblemFile::from_problem(&case.problem);
        let text = schema::to_json(&file);
        let back = schema::parse(&text).unwrap();
        assert_eq!(back, file, "{}", case.name);
        assert_eq!(back.to_problem().unwrap(), case.problem, "{}", case.name);
    }
}

#[test]
fn irrational_entries_survive_the_text_form() {
    let prob = ball_halfspace_ten().problem;
    let text = schema::to_json(&ProblemFile::from_problem(&prob));
    let back = schema::parse(&text).unwrap().to_problem().unwrap();
    let bits = |v: &hproj::Vector| v.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(back.x0()), bits(prob.x0()));
    assert_eq!(back, prob);
}

#[test]
fn bundled_problem_files_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("problems");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        schema::parse(&text).unwrap().to_problem().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn dimension_mismatches_are_located() {
    let mut file = ProblemFile::from_problem(&mixed_five().problem);
    file.feasible_set = SetSpec::Ball {
        center: vec![0.0; 4],
        radius: 1.0,
    };
    let err = file.to_problem().unwrap_err().to_string();
    assert!(err.contains("feasible_set.params.center"), "{err}");
}

#[test]
fn unknown_fields_and_kinds_are_rejected() {
    let err = schema::parse(r#"{"dim": 1, "feasible_set": {"kind": "whole_space"}, "x0": [0], "extra": 1}"#).unwrap_err();
    assert!(err.to_string().contains("extra"), "{err}");
    let err = schema::parse(r#"{"dim": 1, "feasible_set": {"kind": "sphere"}, "x0": [0]}"#).unwrap_err();
    assert!(err.to_string().starts_with("feasible_set"), "{err}");
}

#[test]
fn schedules_parse() {
    let f = schema::parse(
        r#"{"dim": 1, "feasible_set": {"kind": "whole_space"}, "x0": [0],
            "schedules": {"alpha": {"kind": "harmonic", "params": {"scale": 0.5}},
                          "r": {"kind": "linear", "params": {"base": 1, "slope": 0.1}}}}"#,
    )
    .unwrap();
    let s = f.schedules.unwrap();
    assert_eq!(s.alpha, Some(schema::AlphaSpec::Harmonic { scale: 0.5 }));
    assert_eq!(s.r, Some(schema::RSpec::Linear { base: 1.0, slope: 0.1 }));
}
