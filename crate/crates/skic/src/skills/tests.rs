use super::*;
use crate::tasks::TaskFamily;

#[test]
fn lookup_and_prose() {
    let reg = builtin_registry();
    assert!(reg
        .lookup("sub_10")
        .unwrap()
        .prose
        .contains("Subtract 10 from a given number"));
    assert!(reg
        .lookup("compare_10")
        .unwrap()
        .prose
        .contains("Compare a number with 10"));
    assert!(reg.lookup("nonexistent").is_none());
    // figure casing variants resolve to one entry
    assert_eq!(reg.lookup("Add").unwrap().name, "add");
    assert_eq!(
        reg.lookup("Piecewise Function: Continuous").unwrap().name,
        "piecewise_function_continuous"
    );
}

#[test]
fn single_digit_tables_exhaustive() {
    let reg = builtin_registry();
    for a in 0..=9i64 {
        for b in 0..=9i64 {
            let add = execute(&reg, "add_two_single_digit_number", &[Value::Int(a), Value::Int(b)])
                .unwrap();
            assert_eq!(add.result, Value::Int(a + b));
            let mul = execute(&reg, "mul_two_single_digit_number", &[Value::Int(a), Value::Int(b)])
                .unwrap();
            assert_eq!(mul.result, Value::Int(a * b));
            let sub = execute(&reg, "sub_two_single_digit_number", &[Value::Int(a), Value::Int(b)])
                .unwrap();
            assert_eq!(sub.result, Value::Int(a - b));
        }
    }
    for x in 10..=19i64 {
        let call = execute(&reg, "sub_10", &[Value::Int(x)]).unwrap();
        assert_eq!(call.result, Value::Int(x - 10));
    }
    for x in -10..=-1i64 {
        let call = execute(&reg, "add_10", &[Value::Int(x)]).unwrap();
        assert_eq!(call.result, Value::Int(x + 10));
    }
}

#[test]
fn executor_reference_cases() {
    let reg = builtin_registry();
    assert_eq!(
        execute(&reg, "add_two_single_digit_number", &[Value::Int(9), Value::Int(4)])
            .unwrap()
            .result,
        Value::Int(13)
    );
    assert_eq!(
        execute(&reg, "compare_10", &[Value::Int(10)]).unwrap().result,
        Value::Text("equal".into())
    );
    assert_eq!(
        execute(&reg, "find_max", &[Value::Ints(vec![2, 0, -1])])
            .unwrap()
            .result,
        Value::Int(2)
    );
    // positional zero-padded digits, as cited in the worked examples
    assert_eq!(
        execute(&reg, "mul_two_single_digit_number", &[Value::Int(100), Value::Int(60)])
            .unwrap()
            .result,
        Value::Int(6000)
    );
    assert_eq!(
        execute(&reg, "extract_digits", &[Value::Int(7654)]).unwrap().result,
        Value::Ints(vec![7, 6, 5, 4])
    );
    assert_eq!(
        execute(&reg, "last_letter", &[Value::Text("banana".into())])
            .unwrap()
            .result,
        Value::Text("a".into())
    );
    assert_eq!(
        execute(&reg, "command_parse", &[Value::Text("turn opposite left".into())])
            .unwrap()
            .result,
        Value::Texts(vec!["LTURN".into(), "LTURN".into()])
    );
}

#[test]
fn rendered_sentences_follow_figure_phrasing() {
    let reg = builtin_registry();
    let call = execute(&reg, "sub_10", &[Value::Int(14)]).unwrap();
    assert_eq!(call.rendered, "Using Skill <sub_10>, 14-10=4");
    let call = execute(&reg, "find_max", &[Value::Ints(vec![5, 7, 0])]).unwrap();
    assert_eq!(call.rendered, "Using Skill <find_max>, max(5,7,0)=7");
}

#[test]
fn llm_only_skills_refuse_execution() {
    let reg = builtin_registry();
    assert!(matches!(
        execute(&reg, "solve_equation", &[Value::Text("3x+5=7".into())]),
        Err(SkillError::NoExecutor(_))
    ));
    assert!(matches!(
        execute(&reg, "age", &[]),
        Err(SkillError::NoExecutor(_))
    ));
    assert!(matches!(
        execute(&reg, "nonexistent", &[]),
        Err(SkillError::NotFound(_))
    ));
    assert!(matches!(
        execute(&reg, "sub_10", &[Value::Int(42)]),
        Err(SkillError::Signature { .. })
    ));
}

#[test]
fn bundles_match_figure_order() {
    let reg = builtin_registry();
    assert_eq!(
        reg.bundle(TaskFamily::Addition).unwrap(),
        &[
            "extract_digits",
            "list_length",
            "add_two_single_digit_number",
            "sub_10",
            "compare_10"
        ]
    );
    assert_eq!(
        reg.bundle(TaskFamily::LastLetter).unwrap(),
        &["words_to_list", "last_letter"]
    );
    assert_eq!(
        reg.bundle(TaskFamily::Scan).unwrap(),
        &["command_parse", "decompose_commands"]
    );
    // every executor-backed synthetic bundle member exists
    for family in crate::tasks::SYNTHETIC_FAMILIES {
        for name in reg.bundle(family).unwrap() {
            assert!(reg.contains(name), "{name} missing");
        }
    }
}

#[test]
fn skill_block_rendering() {
    let reg = builtin_registry();
    let block = render_skill_block(&reg, TaskFamily::LastLetter, None).unwrap();
    assert!(block.starts_with("Skill <words_to_list>: Put the asked words to a list."));
    assert!(block.contains("Skill <last_letter>:"));
    // figure-order check for the five addition skills
    let add_block = render_skill_block(&reg, TaskFamily::Addition, None).unwrap();
    let positions: Vec<usize> = [
        "Skill <extract_digits>",
        "Skill <list_length>",
        "Skill <add_two_single_digit_number>",
        "Skill <sub_10>",
        "Skill <compare_10>",
    ]
    .iter()
    .map(|s| add_block.find(s).expect(s))
    .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));

    let empty = render_skill_block(&reg, TaskFamily::Addition, Some(&[])).unwrap();
    assert!(empty.is_empty());

    // distinct subsets give distinct blocks
    let sub1 =
        render_skill_block(&reg, TaskFamily::Addition, Some(&["sub_10".to_string()])).unwrap();
    let sub2 =
        render_skill_block(&reg, TaskFamily::Addition, Some(&["compare_10".to_string()])).unwrap();
    assert_ne!(sub1, sub2);

    assert!(matches!(
        render_skill_block(&reg, TaskFamily::Rte, None),
        Err(SkillError::UnknownFamily(_))
    ));
    assert!(matches!(
        render_skill_block(&reg, TaskFamily::Addition, Some(&["find_max".to_string()])),
        Err(SkillError::NotInBundle(_))
    ));
}

#[test]
fn gsm8k_block_uses_composite_arithmetic_prose() {
    let reg = builtin_registry();
    let block = render_skill_block(&reg, TaskFamily::Gsm8k, None).unwrap();
    assert!(block.contains("Use the skills to add two numbers."));
    assert!(block.contains("[The steps to perform the add]"));
    assert!(block.contains("Skill <age>:"));
    // the shared entries keep their plain prose elsewhere
    let dp_block = render_skill_block(&reg, TaskFamily::DynProg, None).unwrap();
    assert!(dp_block.contains("Skill <add>: Add two numbers."));
}

#[test]
fn math_block_has_header_and_all_skills() {
    let reg = builtin_registry();
    let block = render_skill_block(&reg, TaskFamily::Math, None).unwrap();
    assert!(block.starts_with("You have the knowledge of many skills"));
    for name in ["Combination", "Congruences", "Quadratic Formula", "GCD"] {
        assert!(block.contains(&format!("Skill <{name}>:")), "{name}");
    }
}

#[test]
fn execution_is_pure() {
    let reg = builtin_registry();
    let a = execute(&reg, "add", &[Value::Int(3), Value::Int(4)]).unwrap();
    let b = execute(&reg, "add", &[Value::Int(3), Value::Int(4)]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn discovery_parses_skill_lines() {
    let examples = vec![("problem".to_string(), "solution".to_string())];
    let drafts = discover_skills(&examples, |prompt| {
        assert!(prompt.contains("Example: problem"));
        Ok("Skill <Identify Words>: Find the words in the input.\n\
            Skill <Determine Last Letters>: Take the final letter of each word.\n\
            noise line"
            .to_string())
    })
    .unwrap();
    assert_eq!(drafts.len(), 2);
    assert_eq!(drafts[0].name, "Identify Words");

    assert!(matches!(
        discover_skills(&examples, |_| Ok("no skills here".to_string())),
        Err(SkillError::Discovery { .. })
    ));
    assert!(matches!(
        discover_skills(&[], |_| Ok(String::new())),
        Err(SkillError::Signature { .. })
    ));
}
