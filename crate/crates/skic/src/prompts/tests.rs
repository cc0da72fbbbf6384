use super::*;
use crate::rng::instance_seed;
use crate::tasks::{generate, TaskFamily};
use crate::traces::extract_answer;
use proptest::prelude::*;

fn exemplars(family: TaskFamily, k: usize, seed: u64) -> Vec<Exemplar> {
    select_exemplars(family, &family.exemplar_levels(), k, seed).unwrap()
}

#[test]
fn skic_lastletter_prompt_opens_with_skill_prose() {
    let ex = exemplars(TaskFamily::LastLetter, 2, 11);
    let q = "Take the last letters of the words in 'apple, banana' and concatenate them.";
    let spec = build_prompt(PromptVariant::Skic, TaskFamily::LastLetter, &ex, None, q).unwrap();
    assert!(spec
        .assembled
        .starts_with("Skill <words_to_list>: Put the asked words to a list."));
    assert!(spec.assembled.ends_with(&format!("Example: {q}\n\nAnswer:")));
    assert_eq!(spec.exemplar_ids.len(), 2);
    assert_eq!(spec.char_count, spec.assembled.chars().count());
}

#[test]
fn variant_block_structure() {
    let ex = exemplars(TaskFamily::Addition, 2, 3);
    let q = "Calculate 86+964";
    let build = |v| build_prompt(v, TaskFamily::Addition, &ex, None, q).unwrap();
    let skic = build(PromptVariant::Skic);
    let no_skills = build(PromptVariant::SkicNoSkills);
    let no_grounding = build(PromptVariant::SkicNoGrounding);
    let cot = build(PromptVariant::Cot);
    let fewshot = build(PromptVariant::Fewshot);
    let zeroshot = build(PromptVariant::Zeroshot);

    // dropping the skill block leaves a suffix of the full prompt
    assert!(skic.assembled.ends_with(&no_skills.assembled));
    assert!(skic.assembled.len() > no_skills.assembled.len());
    // both skill-block variants open identically
    let block_len = skic.assembled.len() - no_skills.assembled.len();
    assert_eq!(skic.assembled[..block_len], no_grounding.assembled[..block_len]);

    // grounded variants cite skills in exemplars, stripped ones do not
    assert!(no_skills.assembled.contains("Skill <"));
    let cot_exemplars = &cot.assembled;
    assert!(!cot_exemplars.contains("Skill <"), "{cot_exemplars}");
    let ng_exemplar_part = &no_grounding.assembled[block_len..];
    assert!(!ng_exemplar_part.contains("Skill <"));

    // fewshot pairs questions with bare answers
    assert!(fewshot.assembled.contains("\n\nAnswer: 1"));
    assert!(!fewshot.assembled.contains("DS="));

    assert_eq!(zeroshot.assembled, q);
}

#[test]
fn zero_exemplars_only_allowed_for_zeroshot() {
    let err = build_prompt(PromptVariant::Skic, TaskFamily::Addition, &[], None, "q");
    assert!(matches!(err, Err(PromptError::NoExemplars(_))));
    let ok = build_prompt(PromptVariant::Zeroshot, TaskFamily::Addition, &[], None, "q").unwrap();
    assert_eq!(ok.assembled, "q");
}

#[test]
fn strip_grounding_reference_cases() {
    assert_eq!(
        strip_grounding("Using the Skill <add>, Kody is currently 28+4 = 32 years old."),
        "Kody is currently 28+4 = 32 years old."
    );
    assert_eq!(
        strip_grounding("R[3]=10-10=0 by Skill <sub_10>. R=[1,0,5,0]."),
        "R[3]=10-10=0. R=[1,0,5,0]."
    );
    assert_eq!(
        strip_grounding("Based on Skill <compare_10>, R[2]=15>10."),
        "R[2]=15>10."
    );
    assert_eq!(
        strip_grounding("Using Skill <extract_digits> and Skill <list_length>, extract them."),
        "extract them."
    );
    assert_eq!(strip_grounding("no citations here"), "no citations here");
    // latex styling
    assert_eq!(strip_grounding("Using Skill $<$add$>$, 1+2=3."), "1+2=3.");
}

#[test]
fn stripped_traces_still_yield_the_answer() {
    for family in crate::tasks::SYNTHETIC_FAMILIES {
        for level in family.exemplar_levels() {
            let inst = generate(family, level, 5).unwrap();
            let rendered = crate::traces::render(&crate::traces::gold_trace(&inst).unwrap());
            let stripped = strip_grounding(&rendered);
            assert!(!stripped.contains("Skill <"), "{stripped}");
            assert_eq!(strip_grounding(&stripped), stripped, "idempotence");
            let got = extract_answer(&stripped, family).unwrap();
            assert!(got.matches(&inst.gold_answer), "{family:?}\n{stripped}");
        }
    }
}

#[test]
fn exemplar_selection_levels_and_determinism() {
    let ex = select_exemplars(TaskFamily::Addition, &[2, 3], 2, 9).unwrap();
    assert_eq!(ex[0].instance.level, 2);
    assert_eq!(ex[1].instance.level, 3);
    let again = select_exemplars(TaskFamily::Addition, &[2, 3], 2, 9).unwrap();
    assert_eq!(ex, again);

    let dp = select_exemplars(TaskFamily::DynProg, &[4, 5], 2, 9).unwrap();
    assert_eq!(dp[0].instance.level, 4);
    assert_eq!(dp[1].instance.level, 5);

    assert!(select_exemplars(TaskFamily::Scan, &[1, 2], 0, 9).unwrap().is_empty());
    assert!(matches!(
        select_exemplars(TaskFamily::Scan, &[], 2, 9),
        Err(PromptError::NoLevels)
    ));

    // every exemplar solves to its own gold answer
    for e in ex.iter().chain(&dp) {
        let got = extract_answer(&e.solution_text, e.instance.family).unwrap();
        assert!(got.matches(&e.instance.gold_answer));
    }
}

#[test]
fn exemplars_disjoint_from_eval_stream() {
    let master = 42u64;
    for family in crate::tasks::SYNTHETIC_FAMILIES {
        let ex = exemplars(family, 2, master);
        for level in family.level_grid() {
            for i in 0..40u64 {
                let inst = generate(family, level, instance_seed(master, i)).unwrap();
                assert!(
                    !ex.iter().any(|e| e.instance.id == inst.id),
                    "{family:?} level {level} index {i}"
                );
            }
        }
    }
}

#[test]
fn gsm8k_skill_block_fills_placeholders() {
    let gsm_exemplar = Exemplar {
        instance: crate::tasks::TaskInstance {
            id: "g0".into(),
            family: TaskFamily::Gsm8k,
            level: 0,
            seed: 0,
            payload: crate::tasks::Payload::RawText {
                text: "A question.".into(),
            },
            gold_answer: crate::tasks::GoldAnswer::Integer(3),
        },
        solution_text: "Using the Skill <add>, 1+2=3. The answer is 3.".into(),
    };
    let spec = build_prompt(
        PromptVariant::Skic,
        TaskFamily::Gsm8k,
        &[gsm_exemplar],
        None,
        "Another question.",
    )
    .unwrap();
    assert!(!spec.assembled.contains("[The steps to perform"), "{}", spec.assembled);
    assert!(spec.assembled.contains("calculate 86+964: \n1. Using Skill <extract_digits>"));
    assert!(spec.assembled.contains("DS=[0,9,14,10]"));
    // subtraction walkthrough uses the borrow skills
    assert!(spec.assembled.contains("Skill <compare_0>, R["));
}

#[test]
fn size_estimate_heuristic() {
    assert_eq!(estimate_size(""), (0, 0));
    assert_eq!(estimate_size("abcd"), (4, 1));
    assert_eq!(estimate_size("abcde"), (5, 2));
}

#[test]
fn manifest_and_hash_are_stable() {
    let ex = exemplars(TaskFamily::Scan, 2, 1);
    let build =
        || build_prompt(PromptVariant::Skic, TaskFamily::Scan, &ex, None, "run twice").unwrap();
    let a = build();
    let b = build();
    assert_eq!(a.assembled, b.assembled);
    assert_eq!(a.content_hash(), b.content_hash());
    let manifest = a.manifest();
    assert_eq!(manifest["variant"], "SKIC");
    assert_eq!(manifest["exemplar_ids"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["content_hash"], serde_json::json!(a.content_hash()));
}

#[test]
fn subtraction_walkthrough_is_sound() {
    for (a, b) in [(964u64, 86u64), (1000, 1), (55, 55), (128, 67)] {
        let trace = crate::traces::subtraction_gold(a, b).unwrap();
        let rendered = crate::traces::render(&trace);
        let got = extract_answer(&rendered, TaskFamily::Gsm8k).unwrap();
        assert!(got.matches(&crate::tasks::GoldAnswer::Integer((a - b) as i64)), "{rendered}");
        crate::traces::replay(&trace, &crate::skills::builtin_registry()).unwrap();
    }
    assert!(crate::traces::subtraction_gold(5, 9).is_err());
}

proptest! {
    #[test]
    fn prop_strip_grounding_idempotent_and_preserves_answer_line(
        a in 0u64..100_000, b in 0u64..100_000
    ) {
        let inst = crate::tasks::TaskInstance {
            id: "p".into(),
            family: TaskFamily::Addition,
            level: 1,
            seed: 0,
            payload: crate::tasks::Payload::Operands { a, b },
            gold_answer: crate::tasks::GoldAnswer::Integer((a + b) as i64),
        };
        let rendered = crate::traces::render(&crate::traces::gold_trace(&inst).unwrap());
        let stripped = strip_grounding(&rendered);
        prop_assert_eq!(strip_grounding(&stripped), stripped.clone());
        prop_assert!(!stripped.contains("Skill <"));
        let got = extract_answer(&stripped, TaskFamily::Addition).unwrap();
        prop_assert_eq!(got, crate::tasks::GoldAnswer::Integer((a + b) as i64));
    }

    #[test]
    fn prop_build_prompt_deterministic(seed in 0u64..500) {
        let ex = select_exemplars(TaskFamily::DynProg, &[4, 5], 2, seed).unwrap();
        let a = build_prompt(PromptVariant::Skic, TaskFamily::DynProg, &ex, None, "q").unwrap();
        let b = build_prompt(PromptVariant::Skic, TaskFamily::DynProg, &ex, None, "q").unwrap();
        prop_assert_eq!(a.assembled, b.assembled);
    }
}
