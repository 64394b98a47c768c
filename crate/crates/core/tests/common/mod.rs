//! Shared integration-test helpers: a minimal HTTP server driven by a
//! closure, plus corpus synthesis from a lexical database's own example
//! sentences.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use glossforge::wordnet::{LexicalDatabase, Pos, Synset};

pub fn mini_wordnet_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_wordnet/dict")
}

pub fn real_wordnet_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wordnet/dict")
}

/// (route, request body, zero-based request index) → (status, response body).
pub type Handler =
    Arc<dyn Fn(&str, &serde_json::Value, usize) -> (u16, serde_json::Value) + Send + Sync>;

/// Single-threaded HTTP/1.1 server bound to an ephemeral local port.
/// Connections are closed after one exchange so every client attempt is
/// observable through the request counter.
pub struct TestServer {
    addr: SocketAddr,
    requests: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(handler: Handler) -> TestServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
        let addr = listener.local_addr().expect("server address");
        let requests = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let worker = {
            let requests = Arc::clone(&requests);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let index = requests.fetch_add(1, Ordering::SeqCst);
                    if let Err(error) = serve_one(stream, &handler, index) {
                        eprintln!("test server: {error}");
                    }
                }
            })
        };
        TestServer {
            addr,
            requests,
            stop,
            worker: Some(worker),
        }
    }

    /// Echo translation plus a fixed fill-mask answer; handy default.
    pub fn echo() -> TestServer {
        TestServer::start(Arc::new(|route, body, _| match route {
            "translate" => (
                200,
                serde_json::json!({ "translations": body["texts"] }),
            ),
            "fill_mask" => (
                200,
                serde_json::json!({ "candidates": [["one", 0.9], ["two", 0.5], ["three", 0.1]] }),
            ),
            _ => (404, serde_json::json!({ "error": "no such route" })),
        }))
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

fn serve_one(stream: TcpStream, handler: &Handler, index: usize) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_string();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let parsed: serde_json::Value =
        serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);
    let (status, reply) = handler(path.trim_start_matches('/'), &parsed, index);
    let payload = reply.to_string();
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let mut stream = reader.into_inner();
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fold(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Labeled corpus assembled from example sentences in the database. The
/// target of each instance is a word form of the synset the example
/// illustrates, so every gold key is exact by construction.
pub struct SyntheticCorpus {
    pub xml: String,
    pub gold: String,
    pub instances: usize,
    /// Noun sense count per instance, for summation oracles.
    pub sense_counts: Vec<usize>,
}

pub fn synthesize_noun_corpus(db: &LexicalDatabase, limit: usize) -> SyntheticCorpus {
    let mut sets: Vec<&Synset> = db
        .synsets()
        .filter(|s| s.id().pos == Pos::Noun)
        .collect();
    sets.sort_by_key(|s| s.id());

    let mut xml = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <corpus lang=\"en\" source=\"synthetic\">\n<text id=\"d000\">\n",
    );
    let mut gold = String::new();
    let mut sense_counts = Vec::new();
    let mut emitted = 0usize;

    'synsets: for synset in sets {
        if emitted >= limit {
            break;
        }
        let single_words: Vec<&str> = synset
            .lemmas()
            .filter(|l| !l.contains('_'))
            .collect();
        if single_words.is_empty() {
            continue;
        }
        for example in synset.examples() {
            let tokens: Vec<&str> = example.split_whitespace().collect();
            if tokens.len() < 3 {
                continue;
            }
            let hit = tokens.iter().enumerate().find_map(|(i, tok)| {
                let folded = fold(tok);
                single_words
                    .iter()
                    .find(|lemma| lemma.to_lowercase() == folded)
                    .map(|lemma| (i, *lemma))
            });
            let Some((target, lemma)) = hit else { continue };
            let senses = db.senses_of(lemma, Pos::Noun);
            let Some((key, _)) = senses
                .iter()
                .find(|(_, s)| s.id() == synset.id())
            else {
                continue;
            };
            let sentence_id = format!("d000.s{emitted:05}");
            let instance_id = format!("{sentence_id}.t000");
            xml.push_str(&format!("<sentence id=\"{sentence_id}\">\n"));
            for (i, tok) in tokens.iter().enumerate() {
                let surface = escape_xml(tok);
                if i == target {
                    xml.push_str(&format!(
                        "<instance id=\"{instance_id}\" lemma=\"{}\" pos=\"NOUN\">{surface}</instance>\n",
                        escape_xml(lemma)
                    ));
                } else {
                    xml.push_str(&format!(
                        "<wf lemma=\"{}\" pos=\"X\">{surface}</wf>\n",
                        escape_xml(&fold(tok))
                    ));
                }
            }
            xml.push_str("</sentence>\n");
            gold.push_str(&format!("{instance_id} {}\n", key.raw()));
            sense_counts.push(senses.len());
            emitted += 1;
            if emitted >= limit {
                break 'synsets;
            }
            break;
        }
    }
    xml.push_str("</text>\n</corpus>\n");
    SyntheticCorpus {
        xml,
        gold,
        instances: emitted,
        sense_counts,
    }
}

/// Writes the corpus under `dir` and returns the (xml, gold) paths.
pub fn write_corpus(dir: &Path, name: &str, corpus: &SyntheticCorpus) -> (PathBuf, PathBuf) {
    let xml = dir.join(format!("{name}.xml"));
    let gold = dir.join(format!("{name}.gold"));
    std::fs::write(&xml, &corpus.xml).expect("write corpus xml");
    std::fs::write(&gold, &corpus.gold).expect("write corpus gold");
    (xml, gold)
}
