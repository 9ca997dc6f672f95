#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mcforge {

// ---------------------------------------------------------------- chunking

struct MathSpan {
	std::size_t start = 0; // [start, end) offsets into the source text
	std::size_t end = 0;

	bool operator==(const MathSpan&) const = default;
};

/// LaTeX-style math capture: $...$, $$...$$, \(...\), \[...\] and
/// \begin{equation}...\end{equation}, scanned left to right without
/// overlaps.  \$ never opens or closes an inline span.
std::vector<MathSpan> find_math_spans(std::string_view text);

struct ChunkPolicy {
	std::size_t chunk_size = 1000;
	std::size_t overlap = 200;
};

struct DocumentChunk {
	std::string doc_id; // sha256 of the source text
	int chunk_index = 0;
	std::string text;
	std::size_t start = 0; // char span [start, end) in the source
	std::size_t end = 0;
	std::vector<MathSpan> math; // source offsets of spans carried whole

	bool operator==(const DocumentChunk&) const = default;
};

/// Split text into chunks of at most chunk_size chars where consecutive
/// chunks share overlap chars.  A math span shorter than chunk_size is
/// never cut: the boundary retreats to the span start and the span rides
/// whole in the next chunk, shrinking that one overlap when it must.
/// doc_id is left empty; ingest fills it in.
std::vector<DocumentChunk> chunk_document(const std::string& text,
                                          const ChunkPolicy& policy = {});

// --------------------------------------------------------------- embedding

class Embedder {
public:
	virtual ~Embedder() = default;
	/// Stable identity recorded in the store manifest; a store only accepts
	/// vectors from the embedder that built it.
	virtual std::string id() const = 0;
	/// Unit-normalized vector; every call with the same text returns the
	/// same result.
	virtual std::vector<double> embed(const std::string& text) const = 0;
};

/// Hermetic default: lowercased word tokens hashed into a fixed number of
/// signed buckets, then unit-normalized.  Tokenless text maps to a fixed
/// unit vector so the norm invariant holds for every chunk.
class HashedBowEmbedder : public Embedder {
public:
	explicit HashedBowEmbedder(std::size_t dimension = 256);
	std::string id() const override;
	std::vector<double> embed(const std::string& text) const override;

private:
	std::size_t dimension_;
};

/// POSTs {"model", "input"} to an embeddings endpoint and unit-normalizes
/// data[0].embedding.  MCFORGE_EMBED_KEY, when set, travels as the bearer
/// token.
class HttpEmbedder : public Embedder {
public:
	explicit HttpEmbedder(std::string endpoint, std::string model = "default");
	std::string id() const override;
	std::vector<double> embed(const std::string& text) const override;

private:
	std::string endpoint_;
	std::string model_;
};

/// provider "hash" -> HashedBowEmbedder, "http" -> HttpEmbedder(endpoint).
std::unique_ptr<Embedder> make_embedder(const std::string& provider,
                                        const std::string& endpoint = "",
                                        const std::string& model = "default");

// ------------------------------------------------------------------- store

struct EmbeddedChunk {
	DocumentChunk chunk;
	std::vector<double> vector;

	bool operator==(const EmbeddedChunk&) const = default;
};

struct DocumentRecord {
	std::string source; // file name the content was first seen under
	std::size_t bytes = 0;
	int chunks = 0;

	bool operator==(const DocumentRecord&) const = default;
};

/// One directory holding manifest.json (doc_id -> record, embedder id) and
/// vectors.jsonl (one embedded chunk per line, sorted by doc_id and chunk
/// index).  Both files are replaced atomically on save, so a reopened
/// store always yields the entries that were last written.
class VectorStore {
public:
	explicit VectorStore(std::filesystem::path dir);

	const std::filesystem::path& dir() const { return dir_; }
	std::size_t size() const { return entries_.size(); }
	bool contains(const std::string& doc_id) const;
	const std::vector<EmbeddedChunk>& entries() const { return entries_; }
	const std::map<std::string, DocumentRecord>& manifest() const { return manifest_; }
	const std::string& embedder_id() const { return embedder_id_; }

	/// Adopt the embedder identity (first ingest) or verify it matches the
	/// one the store was built with.
	void bind_embedder(const std::string& id);
	/// Register a document's chunks; rejects duplicate doc ids and vectors
	/// whose dimension disagrees with the store.
	void add_document(const std::string& doc_id, DocumentRecord record,
	                  std::vector<EmbeddedChunk> chunks);
	void save() const;

private:
	std::filesystem::path dir_;
	std::string embedder_id_;
	std::map<std::string, DocumentRecord> manifest_;
	std::vector<EmbeddedChunk> entries_; // sorted by (doc_id, chunk_index)
};

// ------------------------------------------------------------- ingestion

struct IngestOptions {
	ChunkPolicy policy;
	/// External text extraction for .pdf files; {input} is replaced by the
	/// source path, {output} by a scratch file (stdout is captured when the
	/// command has no {output}).  Empty means PDFs cannot be ingested.
	std::string extract_command;
};

struct IngestReport {
	int new_documents = 0;
	int new_chunks = 0;
};

/// Chunk and embed every text/markdown (and extractable PDF) file directly
/// under dir whose content hash the store has not seen, then save.  Files
/// already in the manifest are skipped, so re-ingesting unchanged content
/// reports (0, 0) and leaves the store directory byte-identical.  Takes an
/// exclusive lock on the store directory.
IngestReport ingest(const std::filesystem::path& dir, VectorStore& store,
                    const Embedder& embedder, const IngestOptions& options = {});

// ------------------------------------------------------------- retrieval

struct ScoredChunk {
	DocumentChunk chunk;
	double score = 0; // cosine similarity
};

/// Top-k entries by cosine similarity, descending; exact ties rank by
/// (doc_id, chunk_index).  k larger than the store returns everything.
std::vector<ScoredChunk> retrieve(const std::string& query, const VectorStore& store,
                                  const Embedder& embedder, std::size_t k);

// ---------------------------------------------------------------- answers

struct ChatMessage {
	std::string role; // system | user | assistant
	std::string content;
};

class ChatProvider {
public:
	virtual ~ChatProvider() = default;
	virtual std::string complete(const std::vector<ChatMessage>& messages) const = 0;
};

/// Chat-completions client returning choices[0].message.content.
/// MCFORGE_API_KEY, when set, travels as the bearer token.
class HttpChatProvider : public ChatProvider {
public:
	explicit HttpChatProvider(std::string endpoint, std::string model = "default");
	std::string complete(const std::vector<ChatMessage>& messages) const override;

private:
	std::string endpoint_;
	std::string model_;
};

/// Test double: plays the whole prompt back as "role: content" lines.
class EchoChatProvider : public ChatProvider {
public:
	std::string complete(const std::vector<ChatMessage>& messages) const override;
};

struct Conversation {
	std::vector<std::pair<std::string, std::string>> turns; // (question, answer)
};

struct Answer {
	std::string text;
	std::vector<std::string> cited; // "doc_id:chunk_index" per retrieved chunk
};

/// Retrieve k chunks for the question, send system preamble + cited
/// context + prior turns + question to the provider, and append the new
/// (question, answer) pair to memory.
Answer answer(const std::string& question, const VectorStore& store,
              const Embedder& embedder, const ChatProvider& chat,
              Conversation& memory, std::size_t k = 4);

} // namespace mcforge
