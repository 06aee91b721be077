use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::llm::{parse_json_array, parse_json_payload, ChatRequest, LlmEndpoint, Message};
use crate::prompts::{self, PromptCatalog};
use crate::repbias::Tokenizer;

use super::{AttributeSpec, WordList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// Most frequent words first.
    #[default]
    Frequency,
    /// Words in the order the model produced them.
    Generation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupExamples {
    pub group: String,
    pub words: Vec<String>,
}

/// Positive and negative example answers shown to the generator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShots {
    #[serde(default)]
    pub attribute: String,
    #[serde(default)]
    pub positive: Vec<GroupExamples>,
    #[serde(default)]
    pub negative: Vec<GroupExamples>,
}

impl FewShots {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&raw)?)
    }

    /// The religion examples that ship with the crate.
    pub fn religion() -> Self {
        serde_json::from_str(include_str!("../../data/fewshots_religion.json"))
            .expect("bundled few-shots parse")
    }

    fn render(&self) -> String {
        let attr = &self.attribute;
        let block = |items: &[GroupExamples]| {
            items
                .iter()
                .map(|ex| {
                    format!(
                        "Sensitive attribute: {attr}\nDemographic group: {}\nYour answer:\n{}\n",
                        ex.group,
                        serde_json::to_string(&ex.words).expect("strings serialize")
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        let mut out = String::new();
        if !self.positive.is_empty() {
            out += "Here are positive examples:\n";
            out += &block(&self.positive);
            out += "\n";
        }
        if !self.negative.is_empty() {
            out += "Here are negative examples:\n";
            out += &block(&self.negative);
            out += "\n";
        }
        out
    }
}

fn default_temperature() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub runs: usize,
    pub words_per_run: usize,
    pub validation_count: usize,
    #[serde(default)]
    pub selection_mode: SelectionMode,
    #[serde(default)]
    pub few_shots: FewShots,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Run `i` is sent with seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
}

impl GenerationParams {
    pub fn new(runs: usize, words_per_run: usize, validation_count: usize) -> Result<Self> {
        let p = GenerationParams {
            runs,
            words_per_run,
            validation_count,
            selection_mode: SelectionMode::default(),
            few_shots: FewShots::default(),
            temperature: default_temperature(),
            seed: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.words_per_run == 0 || self.validation_count == 0 {
            return Err(Error::InvalidConfig(
                "runs, words_per_run and validation_count must be positive".into(),
            ));
        }
        if self.validation_count > self.runs * self.words_per_run {
            return Err(Error::InvalidConfig(format!(
                "validation_count {} exceeds runs x words_per_run = {}",
                self.validation_count,
                self.runs * self.words_per_run
            )));
        }
        Ok(())
    }
}

/// Output of [`generate_raw`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Generated {
    pub lists: IndexMap<String, Vec<String>>,
    pub warnings: Vec<String>,
}

fn generation_request(
    spec: &AttributeSpec,
    group: &str,
    run: usize,
    params: &GenerationParams,
    catalog: &PromptCatalog,
) -> ChatRequest {
    let count = params.words_per_run.to_string();
    let task = catalog.render(
        prompts::WORDLIST_GENERATION_TASK,
        &[("count", &count), ("attribute", &spec.attribute), ("group", group)],
    );
    let user = format!("{}{task}", params.few_shots.render());
    ChatRequest::new(
        format!("wordlist-gen:{}:{group}:{run}", spec.attribute),
        vec![
            Message::system(catalog.get(prompts::WORDLIST_GENERATION)),
            Message::user(user),
        ],
    )
    .temperature(params.temperature)
    .seed(params.seed + run as u64)
}

fn string_items(items: Vec<Value>) -> Vec<String> {
    items
        .into_iter()
        .filter_map(|v| match v {
            Value::String(s) => Some(s),
            _ => None,
        })
        .collect()
}

/// Asks for the array again after an unparseable answer.
fn repair(llm: &LlmEndpoint, req: &ChatRequest, bad: &str) -> Option<Vec<String>> {
    let mut messages = req.messages.clone();
    messages.push(Message::assistant(bad));
    messages.push(Message::user(
        "Your answer could not be parsed. Respond only with a JSON array of strings.",
    ));
    let retry = ChatRequest {
        purpose: format!("{}:repair", req.purpose),
        messages,
        ..req.clone()
    };
    let text = llm.complete(&retry).ok()?;
    parse_json_array(&text).ok().map(string_items)
}

/// Runs the generator `runs` times per group and merges the answers,
/// lowercased and de-duplicated in run order.
///
/// A run whose answer cannot be parsed even after one repair request is
/// skipped with a warning. A group for which every run fails is an error.
pub fn generate_raw(
    spec: &AttributeSpec,
    params: &GenerationParams,
    llm: &LlmEndpoint,
    catalog: &PromptCatalog,
) -> Result<Generated> {
    params.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.m())
        .flat_map(|g| (0..params.runs).map(move |r| (g, r)))
        .collect();
    let requests: Vec<ChatRequest> = jobs
        .iter()
        .map(|&(g, r)| generation_request(spec, &spec.groups[g], r, params, catalog))
        .collect();
    let answers = crate::llm::bounded_map(&requests, llm.parallelism(), |req| {
        match llm.complete(req) {
            Ok(text) => match parse_json_array(&text) {
                Ok(items) => Ok(string_items(items)),
                Err(_) => repair(llm, req, &text).ok_or_else(|| "unparseable answer".to_string()),
            },
            Err(e) => Err(e.to_string()),
        }
    });

    let mut out = Generated::default();
    let mut ok_runs = vec![0usize; spec.m()];
    let mut seen: Vec<HashSet<String>> = vec![HashSet::new(); spec.m()];
    for g in &spec.groups {
        out.lists.insert(g.clone(), Vec::new());
    }
    for (&(g, r), answer) in jobs.iter().zip(answers) {
        let group = &spec.groups[g];
        match answer {
            Ok(words) => {
                ok_runs[g] += 1;
                let list = out.lists.get_mut(group).unwrap();
                for w in words {
                    let w = w.trim().to_lowercase();
                    if !w.is_empty() && seen[g].insert(w.clone()) {
                        list.push(w);
                    }
                }
            }
            Err(reason) => {
                let msg = format!("{group} run {r} skipped: {reason}");
                log::warn!("{msg}");
                out.warnings.push(msg);
            }
        }
    }
    for (g, group) in spec.groups.iter().enumerate() {
        if ok_runs[g] == 0 {
            return Err(Error::GenerationFailed {
                group: group.clone(),
            });
        }
        if out.lists[group].is_empty() {
            let msg = format!("{group}: no words generated");
            log::warn!("{msg}");
            out.warnings.push(msg);
        }
    }
    Ok(out)
}

/// Output of [`expand_completeness`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Expanded {
    pub lists: IndexMap<String, Vec<String>>,
    /// Per group, entry to counterpart entry in another group.
    pub counterparts: BTreeMap<String, BTreeMap<String, String>>,
    pub warnings: Vec<String>,
}

fn opt_word(v: Option<&Value>) -> Option<String> {
    v.and_then(Value::as_str)
        .map(|s| s.trim().to_lowercase())
        .filter(|s| !s.is_empty() && s != "null")
}

/// Asks, for every generated word, for its plural and its counterparts in
/// the other groups, and adds whatever the model proposes.
///
/// Only the words present on input are expanded. A failed or unparseable
/// answer leaves that word's groups unchanged and records a warning.
pub fn expand_completeness(
    spec: &AttributeSpec,
    lists: &IndexMap<String, Vec<String>>,
    llm: &LlmEndpoint,
    catalog: &PromptCatalog,
) -> Expanded {
    let mut jobs = Vec::new();
    for (group, words) in lists {
        for w in words {
            jobs.push((group.clone(), w.clone()));
        }
    }
    let requests: Vec<ChatRequest> = jobs
        .iter()
        .map(|(group, word)| {
            let others: Vec<&str> = spec
                .groups
                .iter()
                .filter(|g| *g != group)
                .map(String::as_str)
                .collect();
            let user = format!(
                "Sensitive attribute: {}\nDemographic group: {group}\nOther groups: {}\nCategory label: {word}",
                spec.attribute,
                others.join(", ")
            );
            ChatRequest::new(
                format!("wordlist-complete:{}:{group}:{word}", spec.attribute),
                vec![
                    Message::system(catalog.get(prompts::WORDLIST_COMPLETENESS)),
                    Message::user(user),
                ],
            )
        })
        .collect();
    let answers = llm.complete_many(&requests);

    let mut out = Expanded {
        lists: lists.clone(),
        ..Default::default()
    };
    let mut seen: HashMap<String, HashSet<String>> = lists
        .iter()
        .map(|(g, ws)| (g.clone(), ws.iter().cloned().collect()))
        .collect();
    let mut add = |out: &mut Expanded, group: &str, word: &str| {
        let set = seen.entry(group.to_string()).or_default();
        if set.insert(word.to_string()) {
            out.lists.entry(group.to_string()).or_default().push(word.to_string());
        }
    };

    for ((group, word), answer) in jobs.iter().zip(answers) {
        let map = match answer
            .map_err(|e| e.to_string())
            .and_then(|t| parse_json_payload(&t, &[]).map_err(|e| e.to_string()))
        {
            Ok(m) => m,
            Err(reason) => {
                let msg = format!("completeness for {group}/{word} skipped: {reason}");
                log::warn!("{msg}");
                out.warnings.push(msg);
                continue;
            }
        };
        let plural = opt_word(map.get("plural"));
        if let Some(p) = &plural {
            if p != word {
                add(&mut out, group, p);
            }
        }
        let Some(Value::Object(cps)) = map.get("counterparts") else {
            continue;
        };
        for (other, forms) in cps {
            if other == group || !spec.groups.contains(other) {
                continue;
            }
            let singular = opt_word(forms.get("singular"));
            let other_plural = opt_word(forms.get("plural"));
            for (mine, theirs) in [(Some(word.clone()), singular), (plural.clone(), other_plural)] {
                let (Some(mine), Some(theirs)) = (mine, theirs) else {
                    continue;
                };
                add(&mut out, other, &theirs);
                let here = out.counterparts.entry(group.clone()).or_default();
                here.entry(mine.clone()).or_insert_with(|| theirs.clone());
                let there = out.counterparts.entry(other.clone()).or_default();
                there.entry(theirs).or_insert(mine);
            }
        }
    }
    out
}

/// Token-level occurrence count of every word in `words` over the corpus,
/// case-insensitive. Multi-token words count contiguous token runs. Each
/// word is counted independently of the others.
pub fn compute_frequencies(
    words: &[String],
    corpus: &[Document],
    tokenizer: &Tokenizer,
) -> HashMap<String, u64> {
    use rayon::prelude::*;
    let mut by_first: HashMap<String, Vec<(usize, Vec<String>)>> = HashMap::new();
    for (i, w) in words.iter().enumerate() {
        let toks: Vec<String> = tokenizer
            .tokens(w)
            .iter()
            .map(|t| t.match_form().to_string())
            .collect();
        if let Some(first) = toks.first() {
            by_first.entry(first.clone()).or_default().push((i, toks));
        }
    }
    let counts = corpus
        .par_iter()
        .fold(
            || vec![0u64; words.len()],
            |mut acc, doc| {
                let tokens = tokenizer.tokens(&doc.text);
                let forms: Vec<&str> = tokens.iter().map(|t| t.match_form()).collect();
                for pos in 0..forms.len() {
                    if let Some(cands) = by_first.get(forms[pos]) {
                        for (i, seq) in cands {
                            let end = pos + seq.len();
                            if end <= forms.len() && seq.iter().zip(&forms[pos..end]).all(|(a, b)| a == b) {
                                acc[*i] += 1;
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; words.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    words.iter().cloned().zip(counts).collect()
}

/// Drops zero-frequency entries and keeps at most `validation_count` of the
/// rest, by frequency (ties lexicographic) or in generation order.
pub fn filter_and_select(
    list: &WordList,
    freqs: &HashMap<String, u64>,
    params: &GenerationParams,
) -> WordList {
    let freq = |w: &str| freqs.get(w).copied().unwrap_or(0);
    let mut kept: Vec<String> = list.entries.iter().filter(|w| freq(w) > 0).cloned().collect();
    if params.selection_mode == SelectionMode::Frequency {
        kept.sort_by(|a, b| freq(b).cmp(&freq(a)).then_with(|| a.cmp(b)));
    }
    kept.truncate(params.validation_count);
    let keep: HashSet<&String> = kept.iter().collect();
    let counterpart = list
        .counterpart
        .iter()
        .filter(|(k, _)| keep.contains(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    WordList {
        attribute: list.attribute.clone(),
        group: list.group.clone(),
        entries: kept,
        counterpart,
    }
}
