# datasets: record schemas, JSONL I/O, replay validation, batching
