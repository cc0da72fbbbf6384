use super::*;
use crate::skills::builtin_registry;
use crate::tasks::{generate, instance_from_world, poquet_world, GoldAnswer, TaskFamily};
use proptest::prelude::*;

fn instance(family: TaskFamily, level: u32, seed: u64) -> crate::tasks::TaskInstance {
    generate(family, level, seed).unwrap()
}

fn add_instance(a: u64, b: u64) -> crate::tasks::TaskInstance {
    crate::tasks::TaskInstance {
        id: "fixed".into(),
        family: TaskFamily::Addition,
        level: 3,
        seed: 0,
        payload: crate::tasks::Payload::Operands { a, b },
        gold_answer: GoldAnswer::Integer((a + b) as i64),
    }
}

fn mul_instance(a: u64, b: u64) -> crate::tasks::TaskInstance {
    crate::tasks::TaskInstance {
        id: "fixed".into(),
        family: TaskFamily::Multiplication,
        level: 3,
        seed: 0,
        payload: crate::tasks::Payload::Operands { a, b },
        gold_answer: GoldAnswer::Integer((a * b) as i64),
    }
}

fn dp_instance(values: &[i64]) -> crate::tasks::TaskInstance {
    crate::tasks::TaskInstance {
        id: "fixed".into(),
        family: TaskFamily::DynProg,
        level: values.len() as u32,
        seed: 0,
        payload: crate::tasks::Payload::Sequence {
            values: values.to_vec(),
        },
        gold_answer: GoldAnswer::Integer(crate::tasks::dp_oracle(values).unwrap()),
    }
}

#[test]
fn addition_trace_matches_worked_example() {
    let trace = gold_trace(&add_instance(86, 964)).unwrap();
    let text = render(&trace);
    assert!(text.contains("DM=[8,6]"), "{text}");
    assert!(text.contains("DN=[9,6,4]"));
    assert!(text.contains("DS=[0,9,14,10]"), "{text}");
    assert!(text.contains("R[3]=10=10, so R[2]=1 and R[3]=10-10=0 by Skill <sub_10>"));
    assert!(text.contains("R=[1,0,5,0]"));
    assert!(text.ends_with("The answer is 1050."));
}

#[test]
fn addition_strips_exactly_one_leading_zero() {
    let trace = gold_trace(&add_instance(12, 34)).unwrap();
    let text = render(&trace);
    // R=[0,4,6], one zero stripped
    assert!(text.contains("R=[0,4,6]. The answer is 46."), "{text}");
}

#[test]
fn multiplication_trace_matches_worked_example() {
    let trace = gold_trace(&mul_instance(184, 67)).unwrap();
    let text = render(&trace);
    assert!(text.contains("Add 0,1,len(DM)-1=2 zeros"), "{text}");
    assert!(text.contains("DMO=[1*100,8*10,4*1]=[100,80,4]"));
    assert!(text.contains("DNO=[6*10,7*1]=[60,7]"));
    assert!(text.contains("R=[100*60,100*7,80*60,80*7,4*60,4*7]=[6000,700,4800,560,240,28]"));
    assert!(text.contains("Add the first two numbers: r1=6000+700=6700."));
    assert!(text.contains("Add the third number 4800 to r1: r2=6700+4800=11500."));
    assert!(text.ends_with("The answer is 12328."), "{text}");
}

#[test]
fn last_letter_trace_matches_worked_example() {
    let inst = crate::tasks::TaskInstance {
        id: "fixed".into(),
        family: TaskFamily::LastLetter,
        level: 2,
        seed: 0,
        payload: crate::tasks::Payload::Words {
            words: vec!["apple".into(), "banana".into()],
        },
        gold_answer: GoldAnswer::Text("ea".into()),
    };
    let trace = gold_trace(&inst).unwrap();
    let text = render(&trace);
    assert!(text.contains("D=['apple','banana']"), "{text}");
    assert!(text.contains("the last letter of D[0]='apple' is 'e'. R=[e]"));
    assert!(text.contains("the last letter of D[1]='banana' is 'a'. R=[e,a]"));
    assert!(text.ends_with("R=[e,a]. The answer is 'ea'."));
    // this family cites skills with the definite article
    assert!(text.contains("Using the Skill <words_to_list>"));
}

#[test]
fn dp_trace_matches_worked_example() {
    let trace = gold_trace(&dp_instance(&[3, 2, 1, 5])).unwrap();
    let text = render(&trace);
    assert!(text.contains("max(D[2],A[1]+D[3],0)=max(5,7,0)=7"), "{text}");
    assert!(text.contains("D=[8,7,5,5]"));
    assert!(text.contains("The highest sum is D[0]=8."));
    assert!(text.ends_with("The answer is 8."));

    let trace = gold_trace(&dp_instance(&[1, -5, 3, -4, -1, -1, 2, 2])).unwrap();
    assert!(render(&trace).ends_with("The answer is 6."));
}

#[test]
fn commaqa_trace_matches_worked_example() {
    let inst = instance_from_world(
        poquet_world(),
        "What awards have movies written by people born in 1939 won?",
        7,
    )
    .unwrap();
    let trace = gold_trace(&inst).unwrap();
    let text = render(&trace);
    assert!(text.contains("Using Skill <decompose_qa>"), "{text}");
    assert!(text.contains("Q1: Who were born in the year 1939?"));
    assert!(text.contains("Q2: Which movies did [A1] write?"));
    assert!(text.contains("Q3: Which awards were given to [A2]?"));
    assert!(text.contains("Using Skill <answer_simple_question>, answer Q1:"));
    // final union is rendered as a quoted list
    assert!(trace.final_answer.matches(&inst.gold_answer));
    let extracted = extract_answer(&text, TaskFamily::CommaQa).unwrap();
    assert!(extracted.matches(&inst.gold_answer), "{text}");
}

#[test]
fn scan_trace_matches_worked_example() {
    let inst = crate::tasks::TaskInstance {
        id: "fixed".into(),
        family: TaskFamily::Scan,
        level: 3,
        seed: 0,
        payload: crate::tasks::Payload::Command {
            command: "run and look twice".into(),
        },
        gold_answer: GoldAnswer::ActionSeq(vec!["RUN".into(), "LOOK".into(), "LOOK".into()]),
    };
    let trace = gold_trace(&inst).unwrap();
    let text = render(&trace);
    assert!(
        text.contains(
            "Using the Skill <decompose_commands>, 'run and look twice' can be decomposed to \
             'run' and 'look twice'."
        ),
        "{text}"
    );
    assert!(text.contains("For 'run', using the Skill <command_parse>, 'run' is parsed to 'RUN'."));
    assert!(text.contains(
        "For 'look twice', using the Skill <decompose_commands>, 'look twice' can be \
         decomposed to 'look' and 'look':"
    ));
    assert!(text.contains("The output is 'RUN'+'LOOK'+'LOOK'."));
    assert!(text.ends_with("The answer is RUN LOOK LOOK."));
}

#[test]
fn parse_handles_both_citation_stylings() {
    let plain = parse("1. Using Skill <add>, 1+2=3.\n2. The answer is 3.");
    let latex = parse("1. Using Skill $<$add$>$, 1+2=3.\n2. The answer is 3.");
    assert_eq!(plain.steps[0].skills, vec!["add".to_string()]);
    assert_eq!(latex.steps[0].skills, vec!["add".to_string()]);
    assert_eq!(plain.terminal.as_deref(), Some("3."));
}

#[test]
fn parse_reports_unparsed_spans_and_partitions_input() {
    let text = "preamble chatter\n1. First step with R=[1,2].\nmore of the step\n\n2. The answer is 12.\n";
    let parsed = parse(text);
    assert_eq!(parsed.top_level_count(), 2);
    assert_eq!(parsed.steps[0].bindings.get("R").unwrap(), "[1,2]");
    assert_eq!(parsed.unparsed_spans, vec![(0, 17)]);
    let mut spans = parsed.matched_spans.clone();
    spans.extend(parsed.unparsed_spans.clone());
    spans.sort();
    let covered: usize = spans.iter().map(|(s, e)| e - s).sum();
    assert_eq!(covered, text.len());
    // no overlap
    assert!(spans.windows(2).all(|w| w[0].1 <= w[1].0));
}

#[test]
fn parse_ignores_words_that_look_like_roman_labels() {
    // "mill." trims to a line starting with letters from the roman alphabet
    // but is not a canonical numeral
    let parsed = parse("1. step one\nxiix. not a label\n2. The answer is 4.");
    assert_eq!(parsed.top_level_count(), 2);
    assert_eq!(parsed.sub_step_count(), 0);
}

#[test]
fn roman_numerals_round_trip() {
    for n in 1..400 {
        assert_eq!(roman_value(&roman(n)), Some(n), "{n}");
    }
    assert_eq!(roman(4), "iv");
    assert_eq!(roman(19), "xix");
    assert_eq!(roman_value("iiii"), None);
}

#[test]
fn normalize_answer_per_family() {
    use GoldAnswer::*;
    assert_eq!(
        normalize_answer("'e A'", TaskFamily::LastLetter),
        Some(Text("ea".into()))
    );
    assert_eq!(
        normalize_answer("$1,042,323.", TaskFamily::Addition),
        Some(Integer(1042323))
    );
    assert_eq!(
        normalize_answer("3.5", TaskFamily::Gsm8k),
        Some(Decimal(3.5))
    );
    let set = normalize_answer("[\"B\", \"A\"]", TaskFamily::CommaQa).unwrap();
    assert!(set.matches(&GoldAnswer::string_set(vec!["A".into(), "B".into()])));
    assert_eq!(
        normalize_answer("RUN  LOOK\tLOOK", TaskFamily::Scan),
        Some(ActionSeq(vec!["RUN".into(), "LOOK".into(), "LOOK".into()]))
    );
    assert_eq!(
        normalize_answer("{ 3/4 }", TaskFamily::Math),
        Some(Text("3/4".into()))
    );
    assert_eq!(normalize_answer("not a number", TaskFamily::Addition), None);
}

#[test]
fn extract_answer_falls_back_to_last_value_on_final_line() {
    let got = extract_answer(
        "some reasoning\nD=[8,7,5,5]. The highest sum is D[0]=8.",
        TaskFamily::DynProg,
    )
    .unwrap();
    assert_eq!(got, GoldAnswer::Integer(8));
    let got = extract_answer(
        "thinking\nso the sets are [\"X\"] and then [\"Y\", \"Z\"]",
        TaskFamily::CommaQa,
    )
    .unwrap();
    assert!(got.matches(&GoldAnswer::string_set(vec!["Y".into(), "Z".into()])));
    assert_eq!(extract_answer("no usable output", TaskFamily::Addition), None);
}

#[test]
fn serialized_shape_is_stable() {
    let trace = gold_trace(&add_instance(5, 7)).unwrap();
    let json = serde_json::to_value(&trace).unwrap();
    let step = &json["steps"][0];
    assert!(step.get("path").is_some());
    assert!(step.get("skills").is_some());
    assert!(step.get("text").is_some());
    assert!(step.get("calls").is_none());
    let back: GoldTrace = serde_json::from_value(json).unwrap();
    assert_eq!(back.final_answer, trace.final_answer);
}

#[test]
fn gold_traces_replay_and_round_trip() {
    let registry = builtin_registry();
    let mut cases = Vec::new();
    for family in crate::tasks::SYNTHETIC_FAMILIES {
        for level in family.level_grid() {
            for seed in 0..4 {
                cases.push(instance(family, level, seed * 31 + level as u64));
            }
        }
    }
    for inst in &cases {
        let trace = gold_trace(inst).unwrap();
        replay(&trace, &registry).unwrap_or_else(|e| panic!("{} {e}", inst.id));

        let rendered = render(&trace);
        let parsed = parse(&rendered);
        assert!(parsed.unparsed_spans.is_empty(), "{rendered}");
        assert_eq!(parsed.steps.len(), trace.steps.len(), "{rendered}");
        for (built, recovered) in trace.steps.iter().zip(&parsed.steps) {
            assert_eq!(built.path, recovered.path);
            assert_eq!(built.skills, recovered.skills, "{}", built.text);
            assert_eq!(built.bindings, recovered.bindings, "{}", built.text);
        }
        let extracted = extract_answer(&rendered, inst.family).unwrap();
        assert!(
            extracted.matches(&inst.gold_answer),
            "{extracted:?} vs {:?}\n{rendered}",
            inst.gold_answer
        );
    }
}

#[test]
fn load_only_families_have_no_builder() {
    let inst = crate::tasks::TaskInstance {
        id: "x".into(),
        family: TaskFamily::Gsm8k,
        level: 0,
        seed: 0,
        payload: crate::tasks::Payload::RawText {
            text: "question".into(),
        },
        gold_answer: GoldAnswer::Integer(1),
    };
    assert!(matches!(
        gold_trace(&inst),
        Err(TraceError::UnsupportedFamily(TaskFamily::Gsm8k))
    ));
}

proptest! {
    #[test]
    fn prop_addition_traces_verify(a in 0u64..10_000_000, b in 0u64..10_000_000) {
        let trace = gold_trace(&add_instance(a, b)).unwrap();
        let rendered = render(&trace);
        let got = extract_answer(&rendered, TaskFamily::Addition).unwrap();
        prop_assert_eq!(got, GoldAnswer::Integer((a + b) as i64));
    }

    #[test]
    fn prop_multiplication_traces_verify(a in 1u64..100_000, b in 1u64..100_000) {
        let trace = gold_trace(&mul_instance(a, b)).unwrap();
        let got = extract_answer(&render(&trace), TaskFamily::Multiplication).unwrap();
        prop_assert_eq!(got, GoldAnswer::Integer((a * b) as i64));
    }

    #[test]
    fn prop_dp_traces_verify(values in proptest::collection::vec(-5i64..=5, 1..12)) {
        let inst = dp_instance(&values);
        let trace = gold_trace(&inst).unwrap();
        let got = extract_answer(&render(&trace), TaskFamily::DynProg).unwrap();
        prop_assert_eq!(got, inst.gold_answer);
    }

    #[test]
    fn prop_parse_never_panics_and_partitions(text in "\\PC{0,400}") {
        let parsed = parse(&text);
        let mut spans = parsed.matched_spans.clone();
        spans.extend(parsed.unparsed_spans.clone());
        spans.sort();
        let covered: usize = spans.iter().map(|(s, e)| e - s).sum();
        prop_assert_eq!(covered, text.len());
        prop_assert!(spans.windows(2).all(|w| w[0].1 <= w[1].0));
    }
}
