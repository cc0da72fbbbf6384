//! Skill-block prose. Lookup tables are generated so the text and the
//! executors cannot drift apart.

pub const EXTRACT_DIGITS: &str = "Extract the digits in a number to a list.\nFor example, Extract digits in 123 to D=[1,2,3]. Extract digits in 7654 to D=[7,6,5,4].";

pub const LIST_LENGTH: &str = "Get the number of elements in a list.\nFor example, D=[1,2,3], len(D)=3. A=[1,2,4,5,6], len(A)=5.";

pub const ADD_MULTIPLE: &str = "Add multiple numbers such as m+n+p:\n1. Add the first two numbers m+n and get the result r1=m+n.\n2. Add the third number p to r1 and get the result r2=r1+p.\nFor example, calculate 128+64+79:\n1. Add the first two numbers 128+64 and get the result r1=128+64=192.\n2. Add the third number 79 to r1 and get the result r2=192+79=271.\nSo 128+64+79=271";

pub const ADD: &str = "Add two numbers.\nFor example, 1+2=3. -2+1=-1. 0+(-3)=-3. 1+(-1)=0.";

pub const SUB: &str = "Subtract a number from another number. For example, 128-67=61.";

pub const MUL: &str = "Multiply two numbers. For example, 128*76=9728.";

pub const DIV: &str = "Divide a number from another number. For example 12/3=4.";

pub const FIND_MAX: &str = "Find the max number in a list.\nFor example, max(2,0,-1)=2. max(-3,-2,-1)=-1. max(5,-2,0)=5. max(0,-2,4)=4. max(0,0,0)=0. max(-2,-1,0)=0.";

pub const WORDS_TO_LIST: &str = "Put the asked words to a list. For example, put the words in 'apple' to D=['apple']; put the words in 'apple, banana' to D=['apple','banana'].";

pub const LAST_LETTER: &str = "Get the last letter of one word. For example, the last letter of 'apple' is 'e'; the last letter of 'banana' is 'a'.";

pub const DECOMPOSE_QA: &str = "Decompose a complex question into a set of sub-questions.\nFor example: Decompose the question \"What awards have movies produced by people born in 1910 won?\" into the following sub-questions:\nQ1: Who were born in the year 1910?\nQ2: Which movies did [A1] produce?\nQ3: Which awards were given to [A2]?\nDecompose the question \"What movies have people from the country Stridery acted in?\" into the following sub-questions:\nQ1: Who is from the country Stridery?\nQ2: Which movies did [A1] act in?";

pub const ANSWER_SIMPLE_QUESTION: &str = "Answer simple questions about the passage.\nFor example:\n[A Passage]\nQ: Which awards were given to Zalate?\nA: movie: Zalate ; awarded: Hallowcock. [\"Hallowcock\"]\nQ: Which movies did Muntaril direct?\nA: movie: Premercy ; directed by: Muntaril. [\"Premercy\"]\nQ: Which movies did Muntaril produce?\nA: Muntaril produced the movie Premercy with others. Muntaril produced the movie SkirtSiCine with others. [\"Premercy\", \"SkirtSiCine\"]\nQ: Who are the actors in the movie Premercy?\nA: Monsterscar was an actor in the movie Premercy. [\"Monsterscar\"]";

pub const COMMAND_PARSE: &str = "Parse a simple command into structured output.\nFor example, 'Walk' is parsed to 'WALK', 'Look' is parsed to 'LOOK', 'Run' is parsed to 'RUN', 'Jump' is parsed to 'JUMP', 'turn left' is parsed to 'LTURN', 'turn right' is parsed to 'RTURN', 'Turn opposite left' is parsed to 'LTURN LTURN', 'Turn opposite right' is parsed to 'RTURN RTURN'.";

pub const DECOMPOSE_COMMANDS: &str = "Decompose a complex command into a set of sub-commands.\nFor example, 'Look right' can be decomposed to 'look' and 'turn right', 'Look twice' can be decomposed to 'look' and 'look', 'Look right after look twice' can be decomposed to 'look right' and 'look twice', 'Jump opposite right thrice and walk' can be decomposed to 'jump opposite right thrice', 'walk'.";

pub const AGE: &str = "Describe the age of a person. If a person is P years old, Q years ago, the person was P-Q years old. If a person is P years old, in Q years, the person will be P+Q years old. If person A is P years old, person B is Q years old, and person A is R years older than person B, then P=Q+R. If person A is P years old, person B is Q years old, and person A is R years younger than person B, then P=Q-R.";

pub const SOLVE_EQUATION: &str = "Solve an equation. When subtracting or adding the same number from both sides of the equation, the equation is still true. When moving a number from one side of the equation to the other side, the sign of the number changes. When moving a multiplication from one side of the equation to the other side, it becomes a division on the other side. When moving a division from one side of the equation to the other side, it becomes a multiplication on the other side.\nFor example, if the equation is 3x+5=7, move +5 to the other side, then 3x=7-5. Using the Skill <sub>, 3x=7-5=2. Move 3 to the other side, then x=2/3.";

// composite arithmetic skills in the GSM8K bundle; the prompt assembler
// substitutes the bracketed placeholders with rendered worked examples
pub const GSM8K_ADD: &str = "Use the skills to add two numbers. For example, calculate 86+964: [The steps to perform the add]";
pub const GSM8K_MUL: &str = "Use the skills to multiply two numbers. For example, calculate 86*964: [The steps to perform the multiplication]";
pub const GSM8K_SUB: &str = "Use the skills to subtract a number from another number. For example, calculate 964-86: [The steps to perform the subtraction]";

pub fn add_table() -> String {
    let mut out = String::from("Add two single-digit numbers.\n");
    for a in 0..=9 {
        let row: Vec<String> = (0..=9).map(|b| format!("{a}+{b}={}", a + b)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.trim_end().to_string()
}

pub fn sub_table() -> String {
    let mut out = String::from("Subtract two single-digit numbers.\n");
    for a in 0..=9 {
        let row: Vec<String> = (0..=9).map(|b: i64| format!("{a}-{b}={}", a - b)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.trim_end().to_string()
}

pub fn mul_table() -> String {
    let mut out = String::from("Multiply two single-digit numbers.\n");
    for a in 0..=9 {
        let row: Vec<String> = (1..=9).map(|b| format!("{a}*{b}={}", a * b)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.trim_end().to_string()
}

pub fn sub_10_table() -> String {
    let row: Vec<String> = (10..=19).map(|x| format!("{x}-10={}", x - 10)).collect();
    format!("Subtract 10 from a given number.\n{}", row.join(" "))
}

pub fn add_10_table() -> String {
    let row: Vec<String> = (-10..=-1).map(|x: i64| format!("{x}+10={}", x + 10)).collect();
    format!("Add 10 to a given number.\n{}", row.join(" "))
}

pub fn compare_10_table() -> String {
    let mut parts: Vec<String> = (0..10).map(|x| format!("{x}<10")).collect();
    parts.push("10=10".into());
    parts.extend((11..=19).map(|x| format!("{x}>10")));
    format!("Compare a number with 10.\n{}", parts.join(" "))
}

pub fn compare_0_table() -> String {
    let mut parts: Vec<String> = (1..=10).rev().map(|x| format!("{x}>0")).collect();
    parts.push("0=0".into());
    parts.extend((1..=9).map(|x| format!("-{x}<0")));
    format!("Compare a number with 0.\n{}", parts.join(" "))
}

/// MATH bundle in figure order. Sentences after the first are informal
/// expansions, not normative definitions.
pub fn math_skills() -> &'static [(&'static str, &'static str)] {
    &[
        ("Add", "Add two numbers. For example, 128+987=1115."),
        ("Sub", "Subtract a number from another number. For example, 128-67=61."),
        ("Mul", "Multiply two numbers. For example, 128*76=9728."),
        ("Div", "Divide a number from another number. For example 12/3=4."),
        ("Mod", "Modulus or modulo, it finds the remainder of a division operation. For example, 10 mod 3 = 1, because 10 divided by 3 leaves a remainder of 1."),
        ("Exp", "An exponent refers to the number of times a number is multiplied by itself. For example, 2^3=2*2*2=8."),
        ("Base Conversion", "Base conversion is a way to change numbers from one base to another. For example, binary 101 equals decimal 5."),
        ("Radicals", "A radical represents the root of a number. The square root (represented by sqrt) is the most common radical. For example, sqrt(9)=3."),
        ("Factoring", "In the context of integers, factorization involves expressing a number as the product of prime numbers. For example, 12=2*2*3."),
        ("Solve Equation", "Solve an equation. Apply the same operation to both sides until the unknown stands alone."),
        ("Quadratic Formula", "The quadratic formula is used to solve quadratic equations. For ax^2+bx+c=0, x=(-b +- sqrt(b^2-4ac))/(2a)."),
        ("Complex Number", "A complex number has the form a+bi where i^2=-1."),
        ("Piecewise Function: Continuous", "A piecewise function is continuous if it is continuous at every point in its domain. At each breakpoint the pieces must agree."),
        ("Factorial", "Factorial is a function that multiplies a given number by every number below it until 1. For example, 4!=4*3*2*1=24."),
        ("Probability", "Probability is the measure of the likelihood that an event will occur. It is the ratio of favorable outcomes to all outcomes."),
        ("Conditional Probability", "The probability of an event occurring given that another event has already occurred. P(A|B)=P(A and B)/P(B)."),
        ("Probability Addition Rule", "The Addition Rule in probability is used to calculate the probability of either of two events happening. P(A or B)=P(A)+P(B)-P(A and B)."),
        ("Probability Multiplication Rule", "A way to determine the probability of two events occurring at the same time (conjointly). For independent events, P(A and B)=P(A)*P(B)."),
        ("Counting Principle", "If there are m ways to do one thing, and n ways to do another, then there are m*n ways of doing both."),
        ("Permutations", "Permutations refer to the arrangement of items in a specific order. P(n,k)=n!/(n-k)!."),
        ("Combination", "Combinations refer to the selection of items without regard to the order. C(n,k)=n!/(k!(n-k)!)."),
        ("Perimeter", "The perimeter of a shape is the distance around its boundary. For a rectangle it is 2*(length+width)."),
        ("Area", "The area of a shape is the amount of space that it covers. For a rectangle it is length*width."),
        ("Volume", "Volume is the measure of the amount of space that a three-dimensional object occupies. For a box it is length*width*height."),
        ("Prime Numbers", "A prime number is a natural number greater than 1 that has no positive divisors other than 1 and itself."),
        ("Composite Numbers", "Composite numbers are positive integers that have at least one positive divisor other than one or the number itself."),
        ("GCD", "The Greatest Common Divisor (GCD), also known as the Greatest Common Factor (GCF), is the largest integer dividing two numbers."),
        ("LCM", "The Least Common Multiple (LCM) of two integers is the smallest positive integer that is divisible by both numbers without leaving a remainder."),
        ("Congruences", "Two integers a and b are said to be congruent modulo n if they have the same remainder when divided by n."),
    ]
}
