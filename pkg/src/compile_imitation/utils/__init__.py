# utilities: logging, errors, retries, paths, file output
