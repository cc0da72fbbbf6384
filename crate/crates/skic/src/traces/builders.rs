//! Gold trace construction, one builder per synthetic family. The wording
//! mirrors the worked examples the exemplar blocks are built from, so the
//! renderer output doubles as prompt fixture text.

use super::{skill_citations, GoldTrace, Step, TraceError};
use crate::skills::{builtin_registry, execute, SkillCall, SkillRegistry, Value};
use crate::tasks::{
    answer_simple, dp_table, scan_decompose, scan_parse_simple, CommaQaPayload, Payload,
    TaskFamily, TaskInstance,
};

pub fn gold_trace(instance: &TaskInstance) -> Result<GoldTrace, TraceError> {
    let registry = builtin_registry();
    let mut steps = match (&instance.payload, instance.family) {
        (Payload::Operands { a, b }, TaskFamily::Addition) => {
            build_addition(&registry, *a, *b)?
        }
        (Payload::Operands { a, b }, TaskFamily::Multiplication) => {
            build_multiplication(&registry, *a, *b)?
        }
        (Payload::Words { words }, TaskFamily::LastLetter) => {
            build_last_letter(&registry, words)?
        }
        (Payload::Sequence { values }, TaskFamily::DynProg) => build_dp(&registry, values)?,
        (Payload::CommaQa(payload), TaskFamily::CommaQa) => build_commaqa(&registry, payload)?,
        (Payload::Command { command }, TaskFamily::Scan) => build_scan(&registry, command)?,
        (_, family) if !crate::tasks::SYNTHETIC_FAMILIES.contains(&family) => {
            return Err(TraceError::UnsupportedFamily(family))
        }
        (_, family) => return Err(TraceError::PayloadMismatch(family)),
    };
    for step in &mut steps {
        step.skills = skill_citations(&step.text);
        step.bindings = super::extract_bindings(&step.text);
    }
    Ok(GoldTrace {
        family: instance.family,
        steps,
        final_answer: instance.gold_answer.clone(),
    })
}

fn fmt_ints(values: &[i64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("[{}]", inner.join(","))
}

fn fmt_quoted(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|s| format!("\"{s}\"")).collect();
    format!("[{}]", inner.join(", "))
}

fn digits_of(n: u64) -> Vec<i64> {
    n.to_string()
        .chars()
        .map(|c| c.to_digit(10).unwrap() as i64)
        .collect()
}

fn ordinal(n: usize) -> String {
    const SMALL: [&str; 21] = [
        "zeroth",
        "first",
        "second",
        "third",
        "fourth",
        "fifth",
        "sixth",
        "seventh",
        "eighth",
        "ninth",
        "tenth",
        "eleventh",
        "twelfth",
        "thirteenth",
        "fourteenth",
        "fifteenth",
        "sixteenth",
        "seventeenth",
        "eighteenth",
        "nineteenth",
        "twentieth",
    ];
    if n < SMALL.len() {
        SMALL[n].to_string()
    } else if n < 30 {
        format!("twenty-{}", SMALL[n - 20])
    } else {
        format!("{n}th")
    }
}

fn call(
    registry: &SkillRegistry,
    name: &str,
    args: &[Value],
) -> Result<SkillCall, TraceError> {
    Ok(execute(registry, name, args)?)
}

/// Step 1 shared by addition and multiplication: digit extraction.
fn digits_step(
    registry: &SkillRegistry,
    a: u64,
    b: u64,
    dm: &[i64],
    dn: &[i64],
) -> Result<Step, TraceError> {
    let text = format!(
        "Using Skill <extract_digits> and Skill <list_length>, extract the digits in {a} to \
         DM={}. len(DM)={}. Extract the digits in {b} to DN={}. len(DN)={}.",
        fmt_ints(dm),
        dm.len(),
        fmt_ints(dn),
        dn.len()
    );
    let calls = vec![
        call(registry, "extract_digits", &[Value::Int(a as i64)])?,
        call(registry, "list_length", &[Value::Ints(dm.to_vec())])?,
        call(registry, "extract_digits", &[Value::Int(b as i64)])?,
        call(registry, "list_length", &[Value::Ints(dn.to_vec())])?,
    ];
    Ok(Step::top(1, text).with_calls(calls))
}

fn build_addition(registry: &SkillRegistry, a: u64, b: u64) -> Result<Vec<Step>, TraceError> {
    let dm = digits_of(a);
    let dn = digits_of(b);
    let mut steps = vec![digits_step(registry, a, b, &dm, &dn)?];

    let width = dm.len().max(dn.len());
    let pad = |d: &[i64]| {
        let mut out = vec![0i64; width - d.len()];
        out.extend_from_slice(d);
        out
    };
    let dmp = pad(&dm);
    let dnp = pad(&dn);
    let align = if dm.len() < dn.len() {
        format!(
            "len(DM)={}<len(DN)={}, add {} zeros to the beginning of DM: DM={}.",
            dm.len(),
            dn.len(),
            dn.len() - dm.len(),
            fmt_ints(&dmp)
        )
    } else if dm.len() > dn.len() {
        format!(
            "len(DM)={}>len(DN)={}, add {} zeros to the beginning of DN: DN={}.",
            dm.len(),
            dn.len(),
            dm.len() - dn.len(),
            fmt_ints(&dnp)
        )
    } else {
        format!(
            "len(DM)={}=len(DN)={}, the two lists are aligned: DM={}, DN={}.",
            dm.len(),
            dn.len(),
            fmt_ints(&dmp),
            fmt_ints(&dnp)
        )
    };
    steps.push(Step::top(2, align));

    let sums: Vec<i64> = dmp.iter().zip(&dnp).map(|(x, y)| x + y).collect();
    let pair_exprs: Vec<String> = dmp
        .iter()
        .zip(&dnp)
        .map(|(x, y)| format!("{x}+{y}"))
        .collect();
    let mut add_calls = Vec::new();
    for (x, y) in dmp.iter().zip(&dnp) {
        add_calls.push(call(
            registry,
            "add_two_single_digit_number",
            &[Value::Int(*x), Value::Int(*y)],
        )?);
    }
    steps.push(
        Step::top(
            3,
            format!(
                "Using Skill <add_two_single_digit_number>, add every number in DM={} to the \
                 corresponding number in DN={} to get a list DS=[{}]={}.",
                fmt_ints(&dmp),
                fmt_ints(&dnp),
                pair_exprs.join(","),
                fmt_ints(&sums)
            ),
        )
        .with_calls(add_calls),
    );

    let mut ds = vec![0i64];
    ds.extend(&sums);
    let len = ds.len();
    let mut r = vec![0i64; len];
    steps.push(Step::top(
        4,
        format!(
            "Append a 0 to the beginning of DS: DS={}. Construct a list R={} with len(DS)={len} \
             zeros.",
            fmt_ints(&ds),
            fmt_ints(&r)
        ),
    ));

    steps.push(Step::top(
        5,
        format!("Starting from the last element DS[{}] to DS[1], update R:", len - 1),
    ));
    for (t, j) in (1..len).rev().enumerate() {
        let r_old = r[j];
        let sum = r_old + ds[j];
        let compare = call(registry, "compare_10", &[Value::Int(sum)])?;
        let mut calls = vec![compare];
        let text;
        if sum >= 10 {
            let sub = call(registry, "sub_10", &[Value::Int(sum)])?;
            calls.push(sub);
            r[j] = sum - 10;
            r[j - 1] = 1;
            let sym = if sum == 10 { "=" } else { ">" };
            text = format!(
                "DS[{j}]={}, R[{j}]={r_old}, R[{j}]=R[{j}]+DS[{j}]={r_old}+{}={sum}. Based on \
                 Skill <compare_10>, R[{j}]={sum}{sym}10, so R[{}]=1 and R[{j}]={sum}-10={} by \
                 Skill <sub_10>. R={}.",
                ds[j],
                ds[j],
                j - 1,
                sum - 10,
                fmt_ints(&r)
            );
        } else {
            r[j] = sum;
            text = format!(
                "DS[{j}]={}, R[{j}]={r_old}, R[{j}]=R[{j}]+DS[{j}]={r_old}+{}={sum}. Based on \
                 Skill <compare_10>, R[{j}]={sum}<10, so there is no carry. R={}.",
                ds[j],
                ds[j],
                fmt_ints(&r)
            );
        }
        steps.push(Step::sub(5, (t + 1) as u32, text).with_calls(calls));
    }

    // exactly one leading zero is stripped when reading off the result
    let result_digits: &[i64] = if r.len() > 1 && r[0] == 0 { &r[1..] } else { &r };
    let answer = result_digits.iter().fold(0i64, |acc, d| acc * 10 + d);
    debug_assert_eq!(answer, (a + b) as i64);
    steps.push(Step::top(
        6,
        format!("R={}. The answer is {answer}.", fmt_ints(&r)),
    ));
    Ok(steps)
}

/// Borrow-method subtraction walkthrough for a >= b. No task family poses
/// bare subtraction; this only feeds the composite subtraction skill text.
pub fn subtraction_gold(a: u64, b: u64) -> Result<GoldTrace, TraceError> {
    let registry = builtin_registry();
    if a < b {
        return Err(TraceError::PayloadMismatch(TaskFamily::Gsm8k));
    }
    let dm = digits_of(a);
    let dn = digits_of(b);
    let mut steps = vec![digits_step(&registry, a, b, &dm, &dn)?];

    let width = dm.len();
    let mut dnp = vec![0i64; width - dn.len()];
    dnp.extend_from_slice(&dn);
    if dm.len() > dn.len() {
        steps.push(Step::top(
            2,
            format!(
                "len(DM)={}>len(DN)={}, add {} zeros to the beginning of DN: DN={}.",
                dm.len(),
                dn.len(),
                dm.len() - dn.len(),
                fmt_ints(&dnp)
            ),
        ));
    } else {
        steps.push(Step::top(
            2,
            format!(
                "len(DM)={}=len(DN)={}, the two lists are aligned: DM={}, DN={}.",
                dm.len(),
                dn.len(),
                fmt_ints(&dm),
                fmt_ints(&dnp)
            ),
        ));
    }

    let diffs: Vec<i64> = dm.iter().zip(&dnp).map(|(x, y)| x - y).collect();
    let pair_exprs: Vec<String> = dm
        .iter()
        .zip(&dnp)
        .map(|(x, y)| format!("{x}-{y}"))
        .collect();
    let mut sub_calls = Vec::new();
    for (x, y) in dm.iter().zip(&dnp) {
        sub_calls.push(call(
            &registry,
            "sub_two_single_digit_number",
            &[Value::Int(*x), Value::Int(*y)],
        )?);
    }
    steps.push(
        Step::top(
            3,
            format!(
                "Using Skill <sub_two_single_digit_number>, subtract every number in DN={} from \
                 the corresponding number in DM={} to get a list DS=[{}]={}.",
                fmt_ints(&dnp),
                fmt_ints(&dm),
                pair_exprs.join(","),
                fmt_ints(&diffs)
            ),
        )
        .with_calls(sub_calls),
    );

    let len = diffs.len();
    let mut r = vec![0i64; len];
    steps.push(Step::top(
        4,
        format!("Construct a list R={} with len(DS)={len} zeros.", fmt_ints(&r)),
    ));
    steps.push(Step::top(
        5,
        format!("Starting from the last element DS[{}] to DS[0], update R:", len - 1),
    ));
    for (t, j) in (0..len).rev().enumerate() {
        let r_old = r[j];
        let sum = r_old + diffs[j];
        let compare = call(&registry, "compare_0", &[Value::Int(sum)])?;
        let mut calls = vec![compare];
        let text;
        if sum < 0 {
            let borrowed = call(&registry, "add_10", &[Value::Int(sum)])?;
            calls.push(borrowed);
            r[j] = sum + 10;
            r[j - 1] = -1;
            text = format!(
                "DS[{j}]={}, R[{j}]={r_old}, R[{j}]=R[{j}]+DS[{j}]={r_old}+{}={sum}. Based on \
                 Skill <compare_0>, R[{j}]={sum}<0, so R[{}]=-1 and R[{j}]={sum}+10={} by Skill \
                 <add_10>. R={}.",
                diffs[j],
                diffs[j],
                j - 1,
                sum + 10,
                fmt_ints(&r)
            );
        } else {
            r[j] = sum;
            let sym = if sum == 0 { "=" } else { ">" };
            text = format!(
                "DS[{j}]={}, R[{j}]={r_old}, R[{j}]=R[{j}]+DS[{j}]={r_old}+{}={sum}. Based on \
                 Skill <compare_0>, R[{j}]={sum}{sym}0, so there is no borrow. R={}.",
                diffs[j],
                diffs[j],
                fmt_ints(&r)
            );
        }
        steps.push(Step::sub(5, (t + 1) as u32, text).with_calls(calls));
    }

    let answer = r.iter().fold(0i64, |acc, d| acc * 10 + d);
    debug_assert_eq!(answer, (a - b) as i64);
    steps.push(Step::top(
        6,
        format!("R={}. The answer is {answer}.", fmt_ints(&r)),
    ));

    let mut steps = steps;
    for step in &mut steps {
        step.skills = skill_citations(&step.text);
        step.bindings = super::extract_bindings(&step.text);
    }
    Ok(GoldTrace {
        family: TaskFamily::Gsm8k,
        steps,
        final_answer: crate::tasks::GoldAnswer::Integer(answer),
    })
}

fn positional_zeros_text(list: &str, len: usize) -> String {
    match len {
        1 => format!("len({list})-1=0"),
        2 => format!("0,len({list})-1=1"),
        _ => format!("0,1,len({list})-1={}", len - 1),
    }
}

fn build_multiplication(
    registry: &SkillRegistry,
    a: u64,
    b: u64,
) -> Result<Vec<Step>, TraceError> {
    let dm = digits_of(a);
    let dn = digits_of(b);
    let mut steps = vec![digits_step(registry, a, b, &dm, &dn)?];

    let positional = |d: &[i64]| -> (Vec<i64>, Vec<String>) {
        let len = d.len();
        let values: Vec<i64> = d
            .iter()
            .enumerate()
            .map(|(i, v)| v * 10i64.pow((len - 1 - i) as u32))
            .collect();
        let exprs: Vec<String> = d
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{v}*{}", 10i64.pow((len - 1 - i) as u32)))
            .collect();
        (values, exprs)
    };
    let (dmo, dmo_exprs) = positional(&dm);
    let (dno, dno_exprs) = positional(&dn);
    steps.push(Step::top(
        2,
        format!(
            "Add {} zeros to the end of every number in DM={} according to the position of the \
             number in DM: DMO=[{}]={}.",
            positional_zeros_text("DM", dm.len()),
            fmt_ints(&dm),
            dmo_exprs.join(","),
            fmt_ints(&dmo)
        ),
    ));
    steps.push(Step::top(
        3,
        format!(
            "Add {} zeros to the end of every number in DN={} according to the position of the \
             number in DN: DNO=[{}]={}.",
            positional_zeros_text("DN", dn.len()),
            fmt_ints(&dn),
            dno_exprs.join(","),
            fmt_ints(&dno)
        ),
    ));

    let mut products = Vec::new();
    let mut product_exprs = Vec::new();
    let mut mul_calls = Vec::new();
    for x in &dmo {
        for y in &dno {
            products.push(x * y);
            product_exprs.push(format!("{x}*{y}"));
            mul_calls.push(call(
                registry,
                "mul_two_single_digit_number",
                &[Value::Int(*x), Value::Int(*y)],
            )?);
        }
    }
    steps.push(
        Step::top(
            4,
            format!(
                "Using Skill <mul_two_single_digit_number>, multiple every number in DMO={} with \
                 every number in DNO={} and get R=[{}]={}.",
                fmt_ints(&dmo),
                fmt_ints(&dno),
                product_exprs.join(","),
                fmt_ints(&products)
            ),
        )
        .with_calls(mul_calls),
    );

    let gold = (a as i64) * (b as i64);
    if products.len() == 1 {
        steps.push(Step::top(
            5,
            format!("R={}. The answer is {gold}.", fmt_ints(&products)),
        ));
        return Ok(steps);
    }

    let fold_call = call(registry, "add_multiple_numbers", &[Value::Ints(products.clone())])?;
    steps.push(
        Step::top(
            5,
            format!(
                "Using Skill <add_multiple_numbers>, add all the numbers in R={}:",
                fmt_ints(&products)
            ),
        )
        .with_calls(vec![fold_call]),
    );
    let mut running = products[0] + products[1];
    let first = call(
        registry,
        "add",
        &[Value::Int(products[0]), Value::Int(products[1])],
    )?;
    steps.push(
        Step::sub(
            5,
            1,
            format!(
                "Add the first two numbers: r1={}+{}={running}.",
                products[0], products[1]
            ),
        )
        .with_calls(vec![first]),
    );
    for (t, p) in products.iter().enumerate().skip(2) {
        let prev = running;
        running += p;
        let add = call(registry, "add", &[Value::Int(prev), Value::Int(*p)])?;
        steps.push(
            Step::sub(
                5,
                t as u32,
                format!(
                    "Add the {} number {p} to r{}: r{t}={prev}+{p}={running}.",
                    ordinal(t + 1),
                    t - 1
                ),
            )
            .with_calls(vec![add]),
        );
    }
    debug_assert_eq!(running, gold);
    steps.push(Step::top(
        6,
        format!("r{}={running}. The answer is {gold}.", products.len() - 1),
    ));
    Ok(steps)
}

fn build_last_letter(
    registry: &SkillRegistry,
    words: &[String],
) -> Result<Vec<Step>, TraceError> {
    let joined = words.join(", ");
    let quoted: Vec<String> = words.iter().map(|w| format!("'{w}'")).collect();
    let list = format!("[{}]", quoted.join(","));
    let to_list = call(registry, "words_to_list", &[Value::Text(joined.clone())])?;
    let mut steps = vec![
        Step::top(
            1,
            format!(
                "Using the Skill <words_to_list>, put the asked words, '{joined}', to a list. \
                 D={list}"
            ),
        )
        .with_calls(vec![to_list]),
        Step::top(
            2,
            format!("Get the last letter of each word in D={list} and append it to a new list R=[]:"),
        ),
    ];
    let mut letters: Vec<String> = Vec::new();
    for (i, word) in words.iter().enumerate() {
        let last = call(registry, "last_letter", &[Value::Text(word.clone())])?;
        let letter = match &last.result {
            Value::Text(t) => t.clone(),
            _ => unreachable!(),
        };
        letters.push(letter.clone());
        steps.push(
            Step::sub(
                2,
                (i + 1) as u32,
                format!(
                    "Using the Skill <last_letter>, the last letter of D[{i}]='{word}' is \
                     '{letter}'. R=[{}]",
                    letters.join(",")
                ),
            )
            .with_calls(vec![last]),
        );
    }
    let answer: String = letters.concat();
    steps.push(Step::top(
        3,
        format!("R=[{}]. The answer is '{answer}'.", letters.join(",")),
    ));
    Ok(steps)
}

fn build_dp(registry: &SkillRegistry, values: &[i64]) -> Result<Vec<Step>, TraceError> {
    let n = values.len();
    let table = dp_table(values)?;
    let a_text = fmt_ints(values);
    let mut d = vec![0i64; n];

    let length = call(registry, "list_length", &[Value::Ints(values.to_vec())])?;
    let mut steps = vec![Step::top(
        1,
        format!(
            "A={a_text}. Using Skill <list_length>, len(A)={n}. Construct a list D={} with \
             len(A)={n} zeros.",
            fmt_ints(&d)
        ),
    )
    .with_calls(vec![length])];

    d[n - 1] = table[n - 1];
    let last_max = call(
        registry,
        "find_max",
        &[Value::Ints(vec![values[n - 1], 0])],
    )?;
    steps.push(
        Step::top(
            2,
            format!(
                "Update the last element in D. A[{}]={}. Using Skill <find_max>, max({},0)={}. \
                 D[{}]={} and D={}.",
                n - 1,
                values[n - 1],
                values[n - 1],
                d[n - 1],
                n - 1,
                d[n - 1],
                fmt_ints(&d)
            ),
        )
        .with_calls(vec![last_max]),
    );

    if n >= 2 {
        d[n - 2] = table[n - 2];
        let second_max = call(
            registry,
            "find_max",
            &[Value::Ints(vec![d[n - 1], values[n - 2], 0])],
        )?;
        steps.push(
            Step::top(
                3,
                format!(
                    "Update the second last element in D. D[{}]={}, A[{}]={}. Using Skill \
                     <find_max>, max(D[{}],A[{}],0)=max({},{},0)={}. D[{}]={} and D={}.",
                    n - 1,
                    d[n - 1],
                    n - 2,
                    values[n - 2],
                    n - 1,
                    n - 2,
                    d[n - 1],
                    values[n - 2],
                    d[n - 2],
                    n - 2,
                    d[n - 2],
                    fmt_ints(&d)
                ),
            )
            .with_calls(vec![second_max]),
        );
    }

    if n >= 3 {
        steps.push(Step::top(
            4,
            format!(
                "Starting from the third last element in D, update each element based on \
                 A={a_text}:"
            ),
        ));
        for (t, i) in (0..n - 2).rev().enumerate() {
            let sum = values[i] + d[i + 2];
            let add = call(
                registry,
                "add",
                &[Value::Int(values[i]), Value::Int(d[i + 2])],
            )?;
            let max = call(
                registry,
                "find_max",
                &[Value::Ints(vec![d[i + 1], sum, 0])],
            )?;
            let prev = d.clone();
            d[i] = table[i];
            steps.push(
                Step::sub(
                    4,
                    (t + 1) as u32,
                    format!(
                        "D[{}]={}, D[{}]={}, A[{i}]={}. Using Skill <add>, \
                         A[{i}]+D[{}]={}+{}={sum}. Using Skill <find_max>, \
                         max(D[{}],A[{i}]+D[{}],0)=max({},{sum},0)={}. D[{i}]={} and D={}.",
                        i + 2,
                        prev[i + 2],
                        i + 1,
                        prev[i + 1],
                        values[i],
                        i + 2,
                        values[i],
                        prev[i + 2],
                        i + 1,
                        i + 2,
                        prev[i + 1],
                        d[i],
                        d[i],
                        fmt_ints(&d)
                    ),
                )
                .with_calls(vec![add, max]),
            );
        }
    }

    steps.push(Step::top(
        (steps.last().unwrap().path[0] + 1).max(3),
        format!(
            "D={}. The highest sum is D[0]={}. The answer is {}.",
            fmt_ints(&d),
            d[0],
            d[0]
        ),
    ));
    Ok(steps)
}

fn build_commaqa(
    registry: &SkillRegistry,
    payload: &CommaQaPayload,
) -> Result<Vec<Step>, TraceError> {
    let passage = &payload.world.facts_text;
    let stages = crate::tasks::eval_hops(&payload.world, &payload.hops);
    let answer_call = |question: &str| -> Result<(SkillCall, Vec<String>, Vec<String>), TraceError> {
        let call = call(
            registry,
            "answer_simple_question",
            &[Value::Text(passage.clone()), Value::Text(question.to_string())],
        )?;
        let (evidence, answers) =
            answer_simple(passage, question).expect("gold sub-question must be answerable");
        Ok((call, evidence, answers))
    };

    let mut steps = Vec::new();
    if payload.hops.len() <= 1 {
        let (call, evidence, answers) = answer_call(&payload.question)?;
        steps.push(
            Step::top(
                1,
                format!(
                    "Using Skill <answer_simple_question>, answer the question: {}\n{} A={}",
                    payload.question,
                    evidence.join(" "),
                    fmt_quoted(&answers)
                ),
            )
            .with_calls(vec![call]),
        );
        steps.push(Step::top(
            2,
            format!("The answer is {}.", fmt_quoted(&answers)),
        ));
        return Ok(steps);
    }

    let sub_questions: Vec<String> = payload
        .hops
        .iter()
        .enumerate()
        .map(|(k, h)| format!("Q{}: {}", k + 1, h.question))
        .collect();
    let decompose = call(registry, "decompose_qa", &[Value::Text(payload.question.clone())])?;
    steps.push(
        Step::top(
            1,
            format!(
                "Using Skill <decompose_qa>, decompose the question \"{}\" into the following \
                 sub-questions:\n{}",
                payload.question,
                sub_questions.join("\n")
            ),
        )
        .with_calls(vec![decompose]),
    );

    let q1 = &payload.hops[0].question;
    let (first_call, evidence, _) = answer_call(q1)?;
    steps.push(
        Step::top(
            2,
            format!(
                "Using Skill <answer_simple_question>, answer Q1: {q1}\n{} A1={}",
                evidence.join(" "),
                fmt_quoted(&stages[0])
            ),
        )
        .with_calls(vec![first_call]),
    );

    for j in 2..=payload.hops.len() {
        let step_no = (j + 1) as u32;
        let template = &payload.hops[j - 1].question;
        let placeholder = format!("[A{}]", j - 1);
        let prev = &stages[j - 2];
        let stage = &stages[j - 1];
        if prev.len() == 1 {
            let substituted = template.replace(&placeholder, &prev[0]);
            let (call, evidence, _) = answer_call(&substituted)?;
            steps.push(
                Step::top(
                    step_no,
                    format!(
                        "A{}={}. Using Skill <answer_simple_question>, answer Q{j}: \
                         {substituted}\n{} A{j}={}",
                        j - 1,
                        fmt_quoted(prev),
                        evidence.join(" "),
                        fmt_quoted(stage)
                    ),
                )
                .with_calls(vec![call]),
            );
            continue;
        }
        steps.push(Step::top(
            step_no,
            format!(
                "A{}={}. Using Skill <answer_simple_question>, answer Q{j}: {template}",
                j - 1,
                fmt_quoted(prev)
            ),
        ));
        let mut union: Vec<String> = Vec::new();
        for (t, entity) in prev.iter().enumerate() {
            let substituted = template.replace(&placeholder, entity);
            let (call, evidence, answers) = answer_call(&substituted)?;
            for a in &answers {
                if !union.contains(a) {
                    union.push(a.clone());
                }
            }
            steps.push(
                Step::sub(
                    step_no,
                    (t + 1) as u32,
                    format!(
                        "A{}[{t}]=\"{entity}\", answer Q{j}.{}: {substituted}\n{} A{j}.{}={}",
                        j - 1,
                        t + 1,
                        evidence.join(" "),
                        t + 1,
                        fmt_quoted(&answers)
                    ),
                )
                .with_calls(vec![call]),
            );
        }
        debug_assert_eq!(&union, stage);
        let parts: Vec<String> = (1..=prev.len()).map(|t| format!("A{j}.{t}")).collect();
        steps.push(Step::sub(
            step_no,
            (prev.len() + 1) as u32,
            format!("So A{j}={}={}", parts.join("+"), fmt_quoted(stage)),
        ));
    }

    let final_stage = stages.last().cloned().unwrap_or_default();
    let terminal_no = (payload.hops.len() + 2) as u32;
    steps.push(Step::top(
        terminal_no,
        format!("The answer is {}.", fmt_quoted(&final_stage)),
    ));
    Ok(steps)
}

fn quote_list(parts: &[String]) -> String {
    let quoted: Vec<String> = parts.iter().map(|p| format!("'{p}'")).collect();
    match quoted.len() {
        0 => String::new(),
        1 => quoted[0].clone(),
        2 => format!("{} and {}", quoted[0], quoted[1]),
        _ => format!(
            "{} and {}",
            quoted[..quoted.len() - 1].join(", "),
            quoted[quoted.len() - 1]
        ),
    }
}

struct ScanBuild<'a> {
    registry: &'a SkillRegistry,
    steps: Vec<Step>,
    next: u32,
    outputs: Vec<(String, Vec<String>)>,
}

impl ScanBuild<'_> {
    fn leaf_text(&mut self, phrase: &str) -> String {
        let tokens = scan_parse_simple(phrase).expect("leaf phrase must parse");
        let joined = tokens.join(" ");
        self.outputs.push((phrase.to_string(), tokens));
        joined
    }

    fn process(&mut self, command: &str, is_root: bool) -> Result<(), TraceError> {
        match scan_decompose(command) {
            None => {
                let n = self.next;
                self.next += 1;
                let tokens = self.leaf_text(command);
                let text = if is_root {
                    format!(
                        "Using the Skill <command_parse>, '{command}' is parsed to '{tokens}'."
                    )
                } else {
                    format!(
                        "For '{command}', using the Skill <command_parse>, '{command}' is \
                         parsed to '{tokens}'."
                    )
                };
                let call = call(
                    self.registry,
                    "command_parse",
                    &[Value::Text(command.to_string())],
                )?;
                self.steps.push(Step::top(n, text).with_calls(vec![call]));
                Ok(())
            }
            Some(parts) => {
                let all_leaf = parts.iter().all(|p| scan_decompose(p).is_none());
                let n = self.next;
                self.next += 1;
                let listing = quote_list(&parts);
                let tail = if all_leaf { ":" } else { "." };
                let text = if is_root {
                    format!(
                        "Using the Skill <decompose_commands>, '{command}' can be decomposed \
                         to {listing}{tail}"
                    )
                } else {
                    format!(
                        "For '{command}', using the Skill <decompose_commands>, '{command}' \
                         can be decomposed to {listing}{tail}"
                    )
                };
                let decomposed = call(
                    self.registry,
                    "decompose_commands",
                    &[Value::Text(command.to_string())],
                )?;
                self.steps.push(Step::top(n, text).with_calls(vec![decomposed]));
                if all_leaf {
                    for (k, part) in parts.iter().enumerate() {
                        let tokens = self.leaf_text(part);
                        let parse = call(
                            self.registry,
                            "command_parse",
                            &[Value::Text(part.clone())],
                        )?;
                        self.steps.push(
                            Step::sub(
                                n,
                                (k + 1) as u32,
                                format!(
                                    "Using the Skill <command_parse>, '{part}' is parsed to \
                                     '{tokens}'."
                                ),
                            )
                            .with_calls(vec![parse]),
                        );
                    }
                } else {
                    for part in &parts {
                        self.process(part, false)?;
                    }
                }
                Ok(())
            }
        }
    }
}

fn build_scan(registry: &SkillRegistry, command: &str) -> Result<Vec<Step>, TraceError> {
    let mut build = ScanBuild {
        registry,
        steps: Vec::new(),
        next: 1,
        outputs: Vec::new(),
    };
    build.process(command, true)?;

    let exprs: Vec<String> = build
        .outputs
        .iter()
        .map(|(_, tokens)| format!("'{}'", tokens.join(" ")))
        .collect();
    let flat: Vec<String> = build
        .outputs
        .iter()
        .flat_map(|(_, tokens)| tokens.clone())
        .collect();
    debug_assert_eq!(flat, crate::tasks::scan_oracle(command)?);
    let terminal = build.next;
    build.steps.push(Step::top(
        terminal,
        format!(
            "The output is {}. The answer is {}.",
            exprs.join("+"),
            flat.join(" ")
        ),
    ));
    Ok(build.steps)
}
