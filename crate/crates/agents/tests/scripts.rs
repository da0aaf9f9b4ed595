use agents::script::{bundled_scripts, find_marker, marker_line, ScriptError, TaskScript};

#[test]
fn bundled_suite_is_valid_and_complete() {
    let scripts = bundled_scripts();
    let names: Vec<&str> = scripts.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(
        names,
        vec!["tic-tac-toe", "registration", "markdown", "pomodoro", "dashboard", "visualizer"]
    );
    for script in &scripts {
        script.validate().unwrap();
        assert!(script.todos.len() >= 4, "{} too small", script.name);
        assert!(script.total_body_chars() > 500, "{} bodies too thin", script.name);
    }
    // declared coupling ordering: independent game < forms < high-coupling apps
    let coupling: Vec<f64> = scripts.iter().map(|s| s.coupling).collect();
    assert_eq!(coupling[0], 0.0);
    assert!(coupling[5] > coupling[2]);
}

#[test]
fn find_marker_returns_char_offsets() {
    let text = "alpha\n  // TODO(key-1): do the thing\nomega\n";
    let (start, len) = find_marker(text, "key-1").unwrap();
    assert_eq!(start, 8);
    assert_eq!(len, "// TODO(key-1): do the thing".len());
    assert!(find_marker(text, "key-2").is_none());

    // multibyte text before the marker: offsets count chars, not bytes
    let text = "héllo wörld\n// TODO(k): x\n";
    let (start, _) = find_marker(text, "k").unwrap();
    assert_eq!(start, 12);
}

#[test]
fn validation_rejects_mismatched_marker_description() {
    let toml = r#"
name = "bad"
coupling = 0.0
skeleton = "// TODO(a): old words\n"
[[todos]]
key = "a"
description = "new words"
body = "x"
"#;
    assert_eq!(
        TaskScript::parse(toml).unwrap_err(),
        ScriptError::MarkerMismatch("a".into())
    );
}

#[test]
fn validation_rejects_missing_and_unknown_markers() {
    let missing = r#"
name = "bad"
coupling = 0.0
skeleton = "nothing here\n"
[[todos]]
key = "a"
description = "d"
body = "x"
"#;
    assert_eq!(
        TaskScript::parse(missing).unwrap_err(),
        ScriptError::MissingMarker("a".into())
    );

    let unknown = r#"
name = "bad"
coupling = 0.0
skeleton = "// TODO(a): d\n// TODO(ghost): g\n"
[[todos]]
key = "a"
description = "d"
body = "x"
"#;
    assert_eq!(
        TaskScript::parse(unknown).unwrap_err(),
        ScriptError::UnknownMarker("ghost".into())
    );
}

#[test]
fn validation_rejects_duplicate_keys_and_bad_coupling() {
    let dup = r#"
name = "bad"
coupling = 0.0
skeleton = "// TODO(a): d\n"
[[todos]]
key = "a"
description = "d"
body = "x"
[[todos]]
key = "a"
description = "d"
body = "y"
"#;
    assert_eq!(
        TaskScript::parse(dup).unwrap_err(),
        ScriptError::DuplicateKey("a".into())
    );

    let bad = r#"
name = "bad"
coupling = 1.5
skeleton = "// TODO(a): d\n"
[[todos]]
key = "a"
description = "d"
body = "x"
"#;
    assert!(matches!(
        TaskScript::parse(bad).unwrap_err(),
        ScriptError::BadCoupling(_)
    ));
}

#[test]
fn reference_text_replaces_every_marker() {
    for script in bundled_scripts() {
        let reference = script.reference_text();
        assert!(!reference.contains("// TODO("), "{}", script.name);
        for todo in &script.todos {
            assert!(
                reference.contains(todo.body.trim_end()),
                "{}::{} body missing",
                script.name,
                todo.key
            );
        }
        assert!(find_marker(&script.skeleton, &script.todos[0].key).is_some());
    }
}

#[test]
fn marker_line_matches_the_documented_grammar() {
    assert_eq!(marker_line("nav-bar", "render nav"), "// TODO(nav-bar): render nav");
}
