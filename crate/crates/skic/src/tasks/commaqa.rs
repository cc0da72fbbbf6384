//! Synthetic multi-hop QA worlds in the CommaQA-E style: a small cast of
//! movies and people, a rendered fact passage, and template questions whose
//! gold answers come from relational evaluation over the structured world.

use super::{instance_id, GoldAnswer, Payload, TaskError, TaskFamily, TaskInstance};
use crate::rng::SplitMix64;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub name: String,
    pub birth_year: u32,
    pub country: String,
    pub awards: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movie {
    pub name: String,
    pub directors: Vec<String>,
    pub writers: Vec<String>,
    pub producers: Vec<String>,
    pub actors: Vec<String>,
    pub release_year: u32,
    pub awards: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub people: Vec<Person>,
    pub movies: Vec<Movie>,
    pub facts_text: String,
}

#[derive(Debug, Clone)]
pub struct WorldParams {
    pub movies: usize,
    pub people_min: usize,
    pub people_max: usize,
    pub awards_min: usize,
    pub awards_max: usize,
    pub countries: usize,
}

impl Default for WorldParams {
    fn default() -> Self {
        // scale of the reference passage: 4 movies, 3-4 people, 2-4 awards
        WorldParams {
            movies: 4,
            people_min: 3,
            people_max: 4,
            awards_min: 2,
            awards_max: 4,
            countries: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovieVerb {
    Direct,
    Write,
    Produce,
    ActIn,
}

impl MovieVerb {
    pub fn infinitive(self) -> &'static str {
        match self {
            MovieVerb::Direct => "direct",
            MovieVerb::Write => "write",
            MovieVerb::Produce => "produce",
            MovieVerb::ActIn => "act in",
        }
    }

    pub fn past_participle(self) -> &'static str {
        match self {
            MovieVerb::Direct => "directed",
            MovieVerb::Write => "written",
            MovieVerb::Produce => "produced",
            MovieVerb::ActIn => "acted in",
        }
    }
}

/// One stage of a multi-hop question. The first hop carries its own
/// parameter; later hops take their subjects from the previous answer set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum Relation {
    PeopleFromCountry { country: String },
    PeopleBornIn { year: u32 },
    MoviesByPerson { person: String, verb: MovieVerb },
    AwardsOfMovie { movie: Option<String> },
    MoviesBy { verb: MovieVerb },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    /// Sub-question text; later hops use the `[A{k}]` placeholder.
    pub question: String,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommaQaPayload {
    pub world: World,
    pub question: String,
    pub hops: Vec<Hop>,
}

// ---------------------------------------------------------------------------
// Fact rendering

impl World {
    /// Render every relation exactly once, alternating between the two
    /// sentence styles each relation kind admits.
    pub fn render_facts(people: &[Person], movies: &[Movie]) -> String {
        let mut facts: Vec<String> = Vec::new();
        let mut alt = 0usize;
        let mut style = |a: String, b: String| {
            alt += 1;
            if alt % 2 == 1 {
                a
            } else {
                b
            }
        };
        for m in movies {
            for d in &m.directors {
                facts.push(format!("movie: {} ; directed by: {}.", m.name, d));
            }
        }
        for m in movies {
            for a in &m.awards {
                facts.push(style(
                    format!("movie: {} ; award: {}.", m.name, a),
                    format!("movie: {} ; awarded: {}.", m.name, a),
                ));
            }
        }
        for m in movies {
            for w in &m.writers {
                facts.push(style(
                    format!("movie: {} ; written by: {}.", m.name, w),
                    format!("movie: {} ; writer: {}.", m.name, w),
                ));
            }
        }
        for m in movies {
            facts.push(style(
                format!("movie: {} ; release year: {}.", m.name, m.release_year),
                format!("movie: {} ; year: {}.", m.name, m.release_year),
            ));
        }
        for m in movies {
            for a in &m.actors {
                facts.push(style(
                    format!("{} was an actor in the movie {}.", a, m.name),
                    format!("{} acted in the movie {}.", a, m.name),
                ));
            }
        }
        for p in people {
            facts.push(style(
                format!("{} was born in the year {}.", p.name, p.birth_year),
                format!("{} was born in {}.", p.name, p.birth_year),
            ));
        }
        for p in people {
            facts.push(style(
                format!("{} is from the country of {}.", p.name, p.country),
                format!("{} grew up in the nation of {}.", p.name, p.country),
            ));
        }
        for p in people {
            for a in &p.awards {
                facts.push(style(
                    format!("{} was awarded to {}.", a, p.name),
                    format!("{} won the {} award.", p.name, a),
                ));
            }
        }
        for m in movies {
            for p in &m.producers {
                facts.push(style(
                    format!("{} was one of the producers of the movie {}.", p, m.name),
                    format!("{} produced the movie {} with others.", p, m.name),
                ));
            }
        }
        facts.join(" ")
    }

    pub fn new(people: Vec<Person>, movies: Vec<Movie>) -> World {
        let facts_text = World::render_facts(&people, &movies);
        World {
            people,
            movies,
            facts_text,
        }
    }
}

// ---------------------------------------------------------------------------
// Relational evaluation over the structured world

pub fn movies_by(world: &World, person: &str, verb: MovieVerb) -> Vec<String> {
    world
        .movies
        .iter()
        .filter(|m| {
            let names = match verb {
                MovieVerb::Direct => &m.directors,
                MovieVerb::Write => &m.writers,
                MovieVerb::Produce => &m.producers,
                MovieVerb::ActIn => &m.actors,
            };
            names.iter().any(|n| n == person)
        })
        .map(|m| m.name.clone())
        .collect()
}

fn eval_first_hop(world: &World, relation: &Relation) -> Vec<String> {
    match relation {
        Relation::PeopleFromCountry { country } => world
            .people
            .iter()
            .filter(|p| &p.country == country)
            .map(|p| p.name.clone())
            .collect(),
        Relation::PeopleBornIn { year } => world
            .people
            .iter()
            .filter(|p| p.birth_year == *year)
            .map(|p| p.name.clone())
            .collect(),
        Relation::MoviesByPerson { person, verb } => movies_by(world, person, *verb),
        Relation::AwardsOfMovie { movie: Some(name) } => world
            .movies
            .iter()
            .filter(|m| &m.name == name)
            .flat_map(|m| m.awards.clone())
            .collect(),
        _ => Vec::new(),
    }
}

fn eval_next_hop(world: &World, relation: &Relation, subjects: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for subject in subjects {
        let partial = match relation {
            Relation::MoviesBy { verb } => movies_by(world, subject, *verb),
            Relation::AwardsOfMovie { .. } => world
                .movies
                .iter()
                .filter(|m| &m.name == subject)
                .flat_map(|m| m.awards.clone())
                .collect(),
            other => eval_first_hop(world, other),
        };
        for item in partial {
            if !out.contains(&item) {
                out.push(item);
            }
        }
    }
    out
}

/// Evaluate a hop chain; returns the answer set of every stage.
pub fn eval_hops(world: &World, hops: &[Hop]) -> Vec<Vec<String>> {
    let mut stages: Vec<Vec<String>> = Vec::new();
    for (i, hop) in hops.iter().enumerate() {
        let answers = if i == 0 {
            let mut first = eval_first_hop(world, &hop.relation);
            first.dedup();
            first
        } else {
            eval_next_hop(world, &hop.relation, &stages[i - 1])
        };
        stages.push(answers);
    }
    stages
}

// ---------------------------------------------------------------------------
// Text-side engine: answer simple template questions directly from a fact
// passage. This is the executable semantics behind the
// `answer_simple_question` skill; it must agree with the relational path.

fn sentences(passage: &str) -> Vec<&str> {
    passage
        .split('.')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

struct FactPatterns {
    country: [Regex; 2],
    born: [Regex; 2],
    directed: Regex,
    written: [Regex; 2],
    movie_award: [Regex; 2],
    year: [Regex; 2],
    actor: [Regex; 2],
    person_award: [Regex; 2],
    producer: [Regex; 2],
}

fn patterns() -> &'static FactPatterns {
    static P: OnceLock<FactPatterns> = OnceLock::new();
    P.get_or_init(|| FactPatterns {
        country: [
            Regex::new(r"^(\w+) is from the country of (\w+)$").unwrap(),
            Regex::new(r"^(\w+) grew up in the nation of (\w+)$").unwrap(),
        ],
        born: [
            Regex::new(r"^(\w+) was born in the year (\d+)$").unwrap(),
            Regex::new(r"^(\w+) was born in (\d+)$").unwrap(),
        ],
        directed: Regex::new(r"^movie: (\w+) ; directed by: (\w+)$").unwrap(),
        written: [
            Regex::new(r"^movie: (\w+) ; written by: (\w+)$").unwrap(),
            Regex::new(r"^movie: (\w+) ; writer: (\w+)$").unwrap(),
        ],
        movie_award: [
            Regex::new(r"^movie: (\w+) ; award: (\w+)$").unwrap(),
            Regex::new(r"^movie: (\w+) ; awarded: (\w+)$").unwrap(),
        ],
        year: [
            Regex::new(r"^movie: (\w+) ; release year: (\d+)$").unwrap(),
            Regex::new(r"^movie: (\w+) ; year: (\d+)$").unwrap(),
        ],
        actor: [
            Regex::new(r"^(\w+) was an actor in the movie (\w+)$").unwrap(),
            Regex::new(r"^(\w+) acted in the movie (\w+)$").unwrap(),
        ],
        person_award: [
            Regex::new(r"^(\w+) was awarded to (\w+)$").unwrap(),
            Regex::new(r"^(\w+) won the (\w+) award$").unwrap(),
        ],
        producer: [
            Regex::new(r"^(\w+) was one of the producers of the movie (\w+)$").unwrap(),
            Regex::new(r"^(\w+) produced the movie (\w+) with others$").unwrap(),
        ],
    })
}

/// Scan the passage for facts matching `select`; each match yields the
/// evidence sentence and the extracted answer entity.
fn scan_facts<F>(passage: &str, select: F) -> (Vec<String>, Vec<String>)
where
    F: Fn(&str) -> Option<String>,
{
    let mut evidence = Vec::new();
    let mut answers = Vec::new();
    for s in sentences(passage) {
        if let Some(entity) = select(s) {
            evidence.push(format!("{s}."));
            if !answers.contains(&entity) {
                answers.push(entity);
            }
        }
    }
    (evidence, answers)
}

/// Answer a single template question against the passage. Returns the
/// supporting fact sentences and the answer entities, or None when the
/// question does not match any known template.
pub fn answer_simple(passage: &str, question: &str) -> Option<(Vec<String>, Vec<String>)> {
    static Q: OnceLock<Vec<Regex>> = OnceLock::new();
    let q = Q.get_or_init(|| {
        vec![
            Regex::new(r"^Who is from the country (\w+)\?$").unwrap(),
            Regex::new(r"^Who were born in the year (\d+)\?$").unwrap(),
            Regex::new(r"^Which movies did (\w+) (direct|write|produce|act in)\?$").unwrap(),
            Regex::new(r"^Which awards were given to (\w+)\?$").unwrap(),
            Regex::new(r"^Who are the actors in the movie (\w+)\?$").unwrap(),
            Regex::new(r"^When was the movie (\w+) released\?$").unwrap(),
        ]
    });
    let p = patterns();
    let question = question.trim();

    if let Some(c) = q[0].captures(question) {
        let country = c[1].to_string();
        return Some(scan_facts(passage, |s| {
            p.country.iter().find_map(|re| {
                re.captures(s)
                    .filter(|m| m[2] == country)
                    .map(|m| m[1].to_string())
            })
        }));
    }
    if let Some(c) = q[1].captures(question) {
        let year = c[1].to_string();
        return Some(scan_facts(passage, |s| {
            p.born.iter().find_map(|re| {
                re.captures(s)
                    .filter(|m| m[2] == year)
                    .map(|m| m[1].to_string())
            })
        }));
    }
    if let Some(c) = q[2].captures(question) {
        let person = c[1].to_string();
        let verb = c[2].to_string();
        return Some(scan_facts(passage, |s| match verb.as_str() {
            "direct" => p
                .directed
                .captures(s)
                .filter(|m| m[2] == person)
                .map(|m| m[1].to_string()),
            "write" => p.written.iter().find_map(|re| {
                re.captures(s)
                    .filter(|m| m[2] == person)
                    .map(|m| m[1].to_string())
            }),
            "produce" => p.producer.iter().find_map(|re| {
                re.captures(s)
                    .filter(|m| m[1] == person)
                    .map(|m| m[2].to_string())
            }),
            "act in" => p.actor.iter().find_map(|re| {
                re.captures(s)
                    .filter(|m| m[1] == person)
                    .map(|m| m[2].to_string())
            }),
            _ => None,
        }));
    }
    if let Some(c) = q[3].captures(question) {
        let target = c[1].to_string();
        // movie awards, then person awards; the target name decides which hits
        let (mut ev, mut ans) = scan_facts(passage, |s| {
            p.movie_award.iter().find_map(|re| {
                re.captures(s)
                    .filter(|m| m[1] == target)
                    .map(|m| m[2].to_string())
            })
        });
        let (ev2, ans2) = scan_facts(passage, |s| {
            p.person_award.iter().enumerate().find_map(|(i, re)| {
                re.captures(s)
                    .filter(|m| if i == 0 { m[2] == target } else { m[1] == target })
                    .map(|m| {
                        if i == 0 {
                            m[1].to_string()
                        } else {
                            m[2].to_string()
                        }
                    })
            })
        });
        ev.extend(ev2);
        for a in ans2 {
            if !ans.contains(&a) {
                ans.push(a);
            }
        }
        return Some((ev, ans));
    }
    if let Some(c) = q[4].captures(question) {
        let movie = c[1].to_string();
        return Some(scan_facts(passage, |s| {
            p.actor.iter().find_map(|re| {
                re.captures(s)
                    .filter(|m| m[2] == movie)
                    .map(|m| m[1].to_string())
            })
        }));
    }
    if let Some(c) = q[5].captures(question) {
        let movie = c[1].to_string();
        return Some(scan_facts(passage, |s| {
            p.year.iter().find_map(|re| {
                re.captures(s)
                    .filter(|m| m[1] == movie)
                    .map(|m| m[2].to_string())
            })
        }));
    }
    None
}

/// Decompose a known compound question into template sub-questions.
/// Returns None when the question is not one of the known forms.
pub fn decompose_question(question: &str) -> Option<Vec<String>> {
    let hops = parse_question(question)?;
    Some(hops.into_iter().map(|h| h.question).collect())
}

/// Recognize a question in one of the supported templates and produce the
/// hop chain (the gold decomposition).
pub fn parse_question(question: &str) -> Option<Vec<Hop>> {
    static Q: OnceLock<Vec<Regex>> = OnceLock::new();
    let q = Q.get_or_init(|| {
        vec![
            Regex::new(r"^What movies have (?:the )?people from (?:the country )?(\w+) (written|directed|produced|acted in)\?$").unwrap(),
            Regex::new(r"^What awards have movies (written|directed|produced) by people born in (\d+) won\?$").unwrap(),
        ]
    });
    let question = question.trim();
    if let Some(c) = q[0].captures(question) {
        let country = c[1].to_string();
        let verb = verb_from_participle(&c[2])?;
        return Some(vec![
            Hop {
                question: format!("Who is from the country {country}?"),
                relation: Relation::PeopleFromCountry { country },
            },
            Hop {
                question: format!("Which movies did [A1] {}?", verb.infinitive()),
                relation: Relation::MoviesBy { verb },
            },
        ]);
    }
    if let Some(c) = q[1].captures(question) {
        let verb = verb_from_participle(&c[1])?;
        let year: u32 = c[2].parse().ok()?;
        return Some(vec![
            Hop {
                question: format!("Who were born in the year {year}?"),
                relation: Relation::PeopleBornIn { year },
            },
            Hop {
                question: format!("Which movies did [A1] {}?", verb.infinitive()),
                relation: Relation::MoviesBy { verb },
            },
            Hop {
                question: "Which awards were given to [A2]?".to_string(),
                relation: Relation::AwardsOfMovie { movie: None },
            },
        ]);
    }
    // simple questions decompose to themselves
    if answer_simple("", question).is_some() {
        return Some(vec![simple_hop(question)]);
    }
    None
}

fn simple_hop(question: &str) -> Hop {
    // classify the single-hop relation for gold evaluation
    static Q: OnceLock<Vec<Regex>> = OnceLock::new();
    let q = Q.get_or_init(|| {
        vec![
            Regex::new(r"^Who is from the country (\w+)\?$").unwrap(),
            Regex::new(r"^Which movies did (\w+) (direct|write|produce|act in)\?$").unwrap(),
            Regex::new(r"^Which awards were given to (\w+)\?$").unwrap(),
        ]
    });
    let relation = if let Some(c) = q[0].captures(question) {
        Relation::PeopleFromCountry {
            country: c[1].to_string(),
        }
    } else if let Some(c) = q[1].captures(question) {
        Relation::MoviesByPerson {
            person: c[1].to_string(),
            verb: verb_from_infinitive(&c[2]).expect("verb matched by regex"),
        }
    } else if let Some(c) = q[2].captures(question) {
        Relation::AwardsOfMovie {
            movie: Some(c[1].to_string()),
        }
    } else {
        Relation::AwardsOfMovie { movie: None }
    };
    Hop {
        question: question.to_string(),
        relation,
    }
}

fn verb_from_participle(s: &str) -> Option<MovieVerb> {
    match s {
        "directed" => Some(MovieVerb::Direct),
        "written" => Some(MovieVerb::Write),
        "produced" => Some(MovieVerb::Produce),
        "acted in" => Some(MovieVerb::ActIn),
        _ => None,
    }
}

fn verb_from_infinitive(s: &str) -> Option<MovieVerb> {
    match s {
        "direct" => Some(MovieVerb::Direct),
        "write" => Some(MovieVerb::Write),
        "produce" => Some(MovieVerb::Produce),
        "act in" => Some(MovieVerb::ActIn),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// World sampling

const CONSONANTS: &[char] = &[
    'b', 'c', 'd', 'f', 'g', 'h', 'j', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'w', 'z',
];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

/// Pseudo-word names: 2-4 consonant-vowel syllables, capitalized.
fn pseudo_name(rng: &mut SplitMix64, taken: &mut Vec<String>) -> String {
    loop {
        let syllables = rng.next_range_u64(2, 4);
        let mut name = String::new();
        for _ in 0..syllables {
            name.push(CONSONANTS[rng.next_below(CONSONANTS.len() as u64) as usize]);
            name.push(VOWELS[rng.next_below(VOWELS.len() as u64) as usize]);
        }
        let mut chars = name.chars();
        let cap: String = chars
            .next()
            .map(|c| c.to_ascii_uppercase().to_string() + chars.as_str())
            .unwrap_or_default();
        if !taken.contains(&cap) {
            taken.push(cap.clone());
            return cap;
        }
    }
}

fn sample_distinct<'a>(rng: &mut SplitMix64, pool: &'a [String], k: usize) -> Vec<String> {
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < k.min(pool.len()) {
        let i = rng.next_below(pool.len() as u64) as usize;
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    picked.iter().map(|&i| pool[i].clone()).collect()
}

fn sample_world(rng: &mut SplitMix64, params: &WorldParams) -> World {
    let mut taken = Vec::new();
    let n_people = rng.next_range_u64(params.people_min as u64, params.people_max as u64) as usize;
    let n_awards = rng.next_range_u64(params.awards_min as u64, params.awards_max as u64) as usize;
    let countries: Vec<String> = (0..params.countries)
        .map(|_| pseudo_name(rng, &mut taken))
        .collect();
    let award_pool: Vec<String> = (0..n_awards)
        .map(|_| pseudo_name(rng, &mut taken))
        .collect();
    let people_names: Vec<String> = (0..n_people)
        .map(|_| pseudo_name(rng, &mut taken))
        .collect();
    let people: Vec<Person> = people_names
        .iter()
        .map(|name| Person {
            name: name.clone(),
            birth_year: 1930 + rng.next_below(8) as u32 * 2,
            country: countries[rng.next_below(countries.len() as u64) as usize].clone(),
            awards: if rng.next_below(2) == 0 {
                vec![award_pool[rng.next_below(award_pool.len() as u64) as usize].clone()]
            } else {
                vec![]
            },
        })
        .collect();
    let movies: Vec<Movie> = (0..params.movies)
        .map(|_| {
            let name = pseudo_name(rng, &mut taken);
            let n_writers = rng.next_range_u64(1, 2) as usize;
            let n_producers = rng.next_range_u64(1, 2) as usize;
            let n_actors = rng.next_range_u64(1, 2) as usize;
            Movie {
                name,
                directors: sample_distinct(rng, &people_names, 1),
                writers: sample_distinct(rng, &people_names, n_writers),
                producers: sample_distinct(rng, &people_names, n_producers),
                actors: sample_distinct(rng, &people_names, n_actors),
                release_year: 1950 + rng.next_below(51) as u32,
                awards: if rng.next_below(2) == 0 {
                    vec![award_pool[rng.next_below(award_pool.len() as u64) as usize].clone()]
                } else {
                    vec![]
                },
            }
        })
        .collect();
    World::new(people, movies)
}

fn sample_question(rng: &mut SplitMix64, world: &World, level: u32) -> (String, Vec<Hop>) {
    let verbs = [
        MovieVerb::Write,
        MovieVerb::Direct,
        MovieVerb::Produce,
        MovieVerb::ActIn,
    ];
    match level {
        1 => {
            let pick = rng.next_below(3);
            match pick {
                0 => {
                    let p = &world.people[rng.next_below(world.people.len() as u64) as usize];
                    let q = format!("Who is from the country {}?", p.country);
                    (q.clone(), vec![simple_hop(&q)])
                }
                1 => {
                    let p = &world.people[rng.next_below(world.people.len() as u64) as usize];
                    let verb = verbs[rng.next_below(4) as usize];
                    let q = format!("Which movies did {} {}?", p.name, verb.infinitive());
                    (q.clone(), vec![simple_hop(&q)])
                }
                _ => {
                    let m = &world.movies[rng.next_below(world.movies.len() as u64) as usize];
                    let q = format!("Which awards were given to {}?", m.name);
                    (q.clone(), vec![simple_hop(&q)])
                }
            }
        }
        2 => {
            let p = &world.people[rng.next_below(world.people.len() as u64) as usize];
            let verb = verbs[rng.next_below(4) as usize];
            let q = if verb == MovieVerb::ActIn {
                format!(
                    "What movies have people from the country {} acted in?",
                    p.country
                )
            } else {
                format!(
                    "What movies have the people from {} {}?",
                    p.country,
                    verb.past_participle()
                )
            };
            let hops = parse_question(&q).expect("template question parses");
            (q, hops)
        }
        _ => {
            let p = &world.people[rng.next_below(world.people.len() as u64) as usize];
            let verb = verbs[rng.next_below(3) as usize]; // no "acted in" in this template
            let q = format!(
                "What awards have movies {} by people born in {} won?",
                verb.past_participle(),
                p.birth_year
            );
            let hops = parse_question(&q).expect("template question parses");
            (q, hops)
        }
    }
}

/// Generate a CommaQA instance: a sampled world plus a `level`-hop template
/// question, resampling (up to 32 worlds) when a stage answer set is empty.
pub fn gen_commaqa(level: u32, params: &WorldParams, seed: u64) -> Result<TaskInstance, TaskError> {
    if !(1..=3).contains(&level) {
        return Err(TaskError::LevelOutOfBounds {
            family: TaskFamily::CommaQa,
            level,
            min: 1,
            max: 3,
        });
    }
    let mut rng = SplitMix64::new(seed);
    for _attempt in 0..32 {
        let world = sample_world(&mut rng, params);
        let (question, hops) = sample_question(&mut rng, &world, level);
        let stages = eval_hops(&world, &hops);
        if stages.iter().all(|s| !s.is_empty()) {
            let gold = GoldAnswer::string_set(stages.last().cloned().unwrap_or_default());
            return Ok(TaskInstance {
                id: instance_id(TaskFamily::CommaQa, level, seed),
                family: TaskFamily::CommaQa,
                level,
                seed,
                payload: Payload::CommaQa(CommaQaPayload {
                    world,
                    question,
                    hops,
                }),
                gold_answer: gold,
            });
        }
    }
    Err(TaskError::Unsatisfiable(32))
}

// ---------------------------------------------------------------------------
// Reference fixture worlds

/// The four-movie reference world (Skob, Riften, Tetroxidine, Sheepcrest).
pub fn poquet_world() -> World {
    let people = vec![
        Person {
            name: "Haldron".into(),
            birth_year: 1939,
            country: "Poquet".into(),
            awards: vec!["Lidus".into()],
        },
        Person {
            name: "Flumph".into(),
            birth_year: 1938,
            country: "Stridery".into(),
            awards: vec!["Diaqum".into()],
        },
        Person {
            name: "Conanopeia".into(),
            birth_year: 1938,
            country: "Poquet".into(),
            awards: vec!["Lidus".into()],
        },
    ];
    let movies = vec![
        Movie {
            name: "Skob".into(),
            directors: vec!["Haldron".into()],
            writers: vec!["Haldron".into()],
            producers: vec!["Flumph".into(), "Haldron".into()],
            actors: vec!["Haldron".into()],
            release_year: 1962,
            awards: vec!["Jubeus".into()],
        },
        Movie {
            name: "Riften".into(),
            directors: vec!["Conanopeia".into()],
            writers: vec!["Conanopeia".into(), "Flumph".into()],
            producers: vec!["Haldron".into(), "Conanopeia".into()],
            actors: vec!["Flumph".into(), "Conanopeia".into()],
            release_year: 1972,
            awards: vec!["Handt".into()],
        },
        Movie {
            name: "Tetroxidine".into(),
            directors: vec!["Conanopeia".into()],
            writers: vec!["Conanopeia".into(), "Haldron".into()],
            producers: vec!["Conanopeia".into()],
            actors: vec!["Conanopeia".into(), "Haldron".into()],
            release_year: 1997,
            awards: vec!["Handt".into()],
        },
        Movie {
            name: "Sheepcrest".into(),
            directors: vec!["Flumph".into()],
            writers: vec!["Flumph".into()],
            producers: vec!["Flumph".into(), "Haldron".into()],
            actors: vec!["Flumph".into(), "Conanopeia".into()],
            release_year: 1997,
            awards: vec!["Mariskenna".into()],
        },
    ];
    World::new(people, movies)
}

/// Minimal fixture: Gastrat from Stridery, acting in three movies.
pub fn stridery_world() -> World {
    let people = vec![Person {
        name: "Gastrat".into(),
        birth_year: 1940,
        country: "Stridery".into(),
        awards: vec![],
    }];
    let movies = ["Partnershipmaker", "Nilitude", "Warpstone"]
        .iter()
        .map(|name| Movie {
            name: (*name).into(),
            directors: vec!["Gastrat".into()],
            writers: vec!["Gastrat".into()],
            producers: vec!["Gastrat".into()],
            actors: vec!["Gastrat".into()],
            release_year: 1980,
            awards: vec![],
        })
        .collect();
    World::new(people, movies)
}

/// Build an instance from a fixed world and question (used for fixtures and
/// for external CommaQA data expressed in the same fact styles).
pub fn instance_from_world(
    world: World,
    question: &str,
    seed: u64,
) -> Result<TaskInstance, TaskError> {
    let hops = parse_question(question).ok_or_else(|| TaskError::MalformedRecord {
        line: 0,
        message: format!("unrecognized question template: {question}"),
    })?;
    let level = hops.len() as u32;
    let stages = eval_hops(&world, &hops);
    let gold = GoldAnswer::string_set(stages.last().cloned().unwrap_or_default());
    Ok(TaskInstance {
        id: instance_id(TaskFamily::CommaQa, level, seed),
        family: TaskFamily::CommaQa,
        level,
        seed,
        payload: Payload::CommaQa(CommaQaPayload {
            world,
            question: question.to_string(),
            hops,
        }),
        gold_answer: gold,
    })
}
