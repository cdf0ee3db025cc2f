//! A minimal HTTP/1.1 server speaking the generation contract, for tests.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use fcgen::genclient::{GenerationRequest, Generator, StubGenerator};

#[derive(Clone)]
pub enum Behavior {
    /// Answer with the deterministic stub.
    Stub(StubGenerator),
    /// Always reply with this status and body.
    Fixed(u16, String),
    /// Reply 500 to the first `n` requests, then behave as the stub.
    FailFirst(usize, StubGenerator),
}

pub struct StubServer {
    pub url: String,
    /// Raw request bodies in arrival order.
    pub bodies: Arc<Mutex<Vec<String>>>,
    pub hits: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start(behavior: Behavior) -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let hits = Arc::new(AtomicUsize::new(0));
        let (b, h) = (bodies.clone(), hits.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let (behavior, b, h) = (behavior.clone(), b.clone(), h.clone());
                thread::spawn(move || serve(stream, &behavior, &b, &h));
            }
        });
        StubServer { url, bodies, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, behavior: &Behavior, bodies: &Mutex<Vec<String>>, hits: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    let mut content_length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body).unwrap();
    let body = String::from_utf8(body).unwrap();
    let k = hits.fetch_add(1, Ordering::SeqCst);
    bodies.lock().unwrap().push(body.clone());

    let (status, reply) = if !request_line.starts_with("POST /generate ") {
        (404, "{\"error\":\"not found\"}".to_string())
    } else {
        match behavior {
            Behavior::Fixed(status, reply) => (*status, reply.clone()),
            Behavior::FailFirst(n, _) if k < *n => (500, "{\"error\":\"busy\"}".to_string()),
            Behavior::Stub(g) | Behavior::FailFirst(_, g) => answer(g, &body),
        }
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    );
    let _ = stream.flush();
}

fn answer(g: &StubGenerator, body: &str) -> (u16, String) {
    let Ok(req) = serde_json::from_str::<GenerationRequest>(body) else {
        return (400, "{\"error\":\"bad request\"}".into());
    };
    match g.generate(&req) {
        Ok(resp) => (200, serde_json::to_string(&resp).unwrap()),
        Err(e) => (400, serde_json::json!({ "error": e.to_string() }).to_string()),
    }
}
