//! Source audit: private messages are only ever produced by the
//! observation builder, and the algorithms never touch estimator
//! internals directly.

const SINGLE: &str = include_str!("../src/single.rs");
const MULTI: &str = include_str!("../src/multi.rs");
const ESTIMATORS: &str = include_str!("../src/estimators.rs");

fn non_test(src: &str) -> &str {
    src.split("#[cfg(test)]").next().unwrap()
}

#[test]
fn algorithms_do_not_build_messages_themselves() {
    for (name, src) in [("single", SINGLE), ("multi", MULTI)] {
        let body = non_test(src);
        for forbidden in [
            "PrivateObservation::Ols(",
            "PrivateObservation::Sgd(",
            "OlsObservation::new",
            "make_ols_observation",
            "make_sgd_observation",
            ".ingest(",
            ".step(",
        ] {
            assert!(!body.contains(forbidden), "{name} contains `{forbidden}`");
        }
    }
}

#[test]
fn estimator_updates_only_consume_builder_output() {
    // Every `.update(` call site takes a value bound from `observe`,
    // `user_side` or `synthetic_observations`.
    for (name, src) in [("single", SINGLE), ("multi", MULTI)] {
        let body = non_test(src);
        let calls: Vec<&str> = body.lines().filter(|l| l.contains(".update(")).collect();
        assert!(!calls.is_empty(), "{name} has no update call");
        for line in calls {
            let arg = line.split(".update(").nth(1).unwrap().split(',').next().unwrap().trim();
            let binding = arg.trim_start_matches('&');
            let producer = body
                .lines()
                .find(|l| l.contains(&format!("let {binding} =")) || l.contains(&format!("({binding}, ")) || l.contains(&format!(", {binding})")))
                .unwrap_or_else(|| panic!("{name}: no binding for `{binding}`"));
            let from_builder = producer.contains("observe(")
                || producer.contains("user_side(")
                || (producer.contains("zip(&messages)") && body.contains("let messages = synthetic_observations("));
            assert!(from_builder, "{name}: `{binding}` bound by `{}`", producer.trim());
        }
    }
}

#[test]
fn unselected_arms_receive_the_zero_pair() {
    let body = non_test(MULTI);
    let start = body.find("pub fn synthetic_observations").unwrap();
    let f = &body[start..start + body[start..].find("\n}\n").unwrap()];
    assert!(f.contains("builder.observe(&zero, F::zero(), thetas[i], &mut streams[i])"));
    assert!(ESTIMATORS.contains("pub fn observe"));
}
