//! Runs the codec against a model served over TCP by the in-process mock
//! server, then replays the recorded session offline.

use std::sync::Arc;
use std::time::Duration;

use subword_stego::bridge::{BridgeClient, BridgeConfig, MockServer, ReplayServer, Responder, Transport};
use subword_stego::{
    decode_proposed, encode, greedy_tokenize, train_bpe, train_ngram, BitString, CodecParams,
    Method,
};

fn main() {
    let corpus = include_bytes!("../data/corpus.txt");
    let vocab = train_bpe(corpus, 1000).unwrap();
    let lm = train_ngram(&greedy_tokenize(corpus, &vocab), 3, vocab.len()).unwrap();

    let server = Arc::new(MockServer::new(lm, &vocab, "ngram-3").recording());
    let (addr, _) = Arc::clone(&server).spawn_tcp().unwrap();
    let mut config = BridgeConfig::new(Transport::Tcp(addr.to_string()));
    config.timeout = Duration::from_secs(5);
    let client = BridgeClient::connect(&config, &vocab).unwrap();
    println!("connected to {} at {addr}", client.model_name());

    let message = BitString::from_hex("b1d6e5").unwrap();
    let params = CodecParams::new(Method::Proposed, message.len()).unwrap();
    let prompt = b"The harbor lights";
    let sent = encode(&message, prompt, &client, &vocab, &params).unwrap();
    println!("cover: {}", String::from_utf8_lossy(&sent.cover));

    let recording = server.take_recording().unwrap();
    println!("recorded {} distributions", recording.entries.len());
    let replay = Arc::new(ReplayServer::new(recording));
    let (reader, writer) = replay.spawn_pipe().unwrap();
    let offline = BridgeClient::from_streams(&config, &vocab, Box::new(reader), Box::new(writer)).unwrap();
    let got = decode_proposed(&sent.cover, prompt, &offline, &vocab, &params).unwrap();
    println!("decoded from replay: {}", got.message.to_hex());
    assert_eq!(got.message, message);
}
