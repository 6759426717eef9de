#include "memgov/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "memgov/hash.hpp"

namespace fs = std::filesystem;

namespace memgov {

const WikiEntry* IndexState::find_entry(const EntryId& id) const {
  auto it = entries.find(id);
  return it == entries.end() ? nullptr : &it->second;
}

const BufferEntry* IndexState::find_buffer(const EntryId& id) const {
  auto it = buffer.find(id);
  return it == buffer.end() ? nullptr : &it->second;
}

const ColdObject* IndexState::find_cold(const std::string& id) const {
  auto it = cold.find(id);
  return it == cold.end() ? nullptr : &it->second;
}

const MinorityBranch* IndexState::find_branch(const BranchRef& ref) const {
  auto it = branches.find(ref);
  return it == branches.end() ? nullptr : &it->second;
}

bool IndexState::resolves(const std::string& id) const {
  return entries.count(id) > 0 || buffer.count(id) > 0 || cold.count(id) > 0 ||
         branches.count(id) > 0;
}

std::vector<const WikiEntry*> IndexState::by_vitality() const {
  std::vector<const WikiEntry*> out;
  for (const auto& [id, e] : entries)
    if (e.state != WikiState::archived) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const WikiEntry* a, const WikiEntry* b) {
    if (a->vitality != b->vitality) return a->vitality < b->vitality;
    return a->id < b->id;
  });
  return out;
}

std::vector<const Edge*> IndexState::edges_from(const EntryId& src) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges)
    if (e.src == src) out.push_back(&e);
  return out;
}

std::vector<const Edge*> IndexState::edges_to(const EntryId& dst) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges)
    if (e.dst == dst) out.push_back(&e);
  return out;
}

void to_json(nlohmann::json& j, const IndexState& s) {
  j = {{"buffer", s.buffer},
       {"entries", s.entries},
       {"edges", s.edges},
       {"audit_log", s.audit_log},
       {"branches", s.branches},
       {"cold", s.cold},
       {"model_version", s.model_version},
       {"commit_seq", s.commit_seq},
       {"parent_commit", s.parent_commit},
       {"committed_at", s.committed_at}};
}

void from_json(const nlohmann::json& j, IndexState& s) {
  s.buffer = j.at("buffer").get<std::map<EntryId, BufferEntry>>();
  s.entries = j.at("entries").get<std::map<EntryId, WikiEntry>>();
  s.edges = j.at("edges").get<std::vector<Edge>>();
  s.audit_log = j.at("audit_log").get<std::vector<AuditRecord>>();
  s.branches = j.at("branches").get<std::map<BranchRef, MinorityBranch>>();
  s.cold = j.at("cold").get<std::map<std::string, ColdObject>>();
  s.model_version = j.at("model_version").get<std::string>();
  s.commit_seq = j.at("commit_seq").get<std::int64_t>();
  s.parent_commit = j.at("parent_commit").get<std::string>();
  s.committed_at = j.at("committed_at").get<Tick>();
}

void archive_entry_content(const IndexState& s, Changeset& cs, WikiEntry& e, EventLog& log,
                           Tick now) {
  const std::string cid = cold_id_for(e.commit_hash);
  const bool exists_in_state = s.find_cold(cid) != nullptr;
  const bool exists_in_cs = std::any_of(cs.cold_upserts.begin(), cs.cold_upserts.end(),
                                        [&cid](const ColdObject& c) { return c.id == cid; });
  if (!exists_in_state && !exists_in_cs) {
    ColdObject co;
    co.id = cid;
    co.blob_hash = e.commit_hash;
    co.origin_locator = "wiki:" + e.id;
    co.prior_id = e.cold_id;
    cs.cold_upserts.push_back(co);
    log.emit(now, ev::cold_store, {{"cold", cid}, {"entry", e.id}, {"blob", e.commit_hash}});
  }
  e.cold_id = cid;
}

bool Changeset::empty() const {
  return blobs.empty() && buffer_upserts.empty() && entry_upserts.empty() &&
         edge_upserts.empty() && branch_upserts.empty() && audit_appends.empty() &&
         cold_upserts.empty() && tombstones.empty() && !model_version.has_value();
}

namespace {

fs::path blob_path(const std::string& root, const BlobHash& hash) {
  return fs::path(root) / "objects" / hash.substr(0, 2) / hash.substr(2);
}

// Durable file write: temp file in the same directory, fsync, rename,
// fsync the directory. The rename is the atomic step.
void write_file_durable(const fs::path& target, const std::string& bytes) {
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw AtomicityFailure("cannot open " + tmp.string());
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
      if (n < 0) {
        ::close(fd);
        throw AtomicityFailure("short write to " + tmp.string());
      }
      off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
      ::close(fd);
      throw AtomicityFailure("fsync failed: " + tmp.string());
    }
    ::close(fd);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw AtomicityFailure("rename failed: " + target.string() + ": " + ec.message());
  const int dfd = ::open(target.parent_path().c_str(), O_RDONLY | O_DIRECTORY);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

void append_file_durable(const fs::path& target, const std::string& bytes) {
  if (bytes.empty()) return;
  const int fd = ::open(target.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw AtomicityFailure("cannot open " + target.string());
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      ::close(fd);
      throw AtomicityFailure("short append to " + target.string());
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw AtomicityFailure("fsync failed: " + target.string());
  }
  ::close(fd);
}

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Store::Store(std::string root_dir) : root_(std::move(root_dir)) { load_or_init(); }

void Store::load_or_init() {
  if (root_.empty()) {
    head_ = std::make_shared<IndexState>();
    return;
  }
  fs::create_directories(fs::path(root_) / "objects");
  const auto idx = read_file(fs::path(root_) / "index.json");
  if (!idx) {
    head_ = std::make_shared<IndexState>();
    return;
  }
  nlohmann::json j = nlohmann::json::parse(*idx);
  const std::string head_id = j.at("head").get<std::string>();
  event_hwm_ = j.at("hwm").get<std::int64_t>();
  const auto bytes = get_blob(head_id);
  if (!bytes) throw AtomicityFailure("head commit blob missing: " + head_id);
  auto state = std::make_shared<IndexState>();
  from_json(nlohmann::json::parse(*bytes), *state);
  head_ = std::move(state);
  head_commit_ = head_id;
}

Snapshot Store::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return Snapshot{head_, head_commit_};
}

BlobHash Store::put_blob(const std::string& bytes) {
  const BlobHash hash = sha256_hex(bytes);
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (mem_blobs_.count(hash)) return hash;
    mem_blobs_[hash] = bytes;
  }
  if (!root_.empty()) {
    const fs::path p = blob_path(root_, hash);
    if (!fs::exists(p)) {
      fs::create_directories(p.parent_path());
      write_file_durable(p, bytes);
    }
  }
  return hash;
}

std::optional<std::string> Store::get_blob(const BlobHash& hash) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = mem_blobs_.find(hash);
    if (it != mem_blobs_.end()) return it->second;
  }
  if (!root_.empty()) return read_file(blob_path(root_, hash));
  return std::nullopt;
}

bool Store::has_blob(const BlobHash& hash) const { return get_blob(hash).has_value(); }

void Store::set_capacity(std::optional<std::size_t> max_active_entries) {
  capacity_ = max_active_entries;
}

void Store::set_commit_failpoint(std::function<void(const char*)> fn) {
  failpoint_ = std::move(fn);
}

std::string Store::commit(const Snapshot& base, const Changeset& cs, Tick now, EventLog& log) {
  std::lock_guard<std::mutex> writer(writer_mu_);
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (base.commit_id != head_commit_)
      throw StaleSnapshot("commit base " + base.commit_id + " is not head " + head_commit_);
  }

  auto next = std::make_shared<IndexState>(*base.state);

  for (const auto& bytes : cs.blobs) put_blob(bytes);
  if (failpoint_) failpoint_("blobs-written");

  for (const auto& b : cs.buffer_upserts) next->buffer[b.id] = b;
  for (const auto& e : cs.entry_upserts) next->entries[e.id] = e;
  for (const auto& edge : cs.edge_upserts) {
    if (!edge.valid()) throw AtomicityFailure("malformed edge " + edge.src + "->" + edge.dst);
    auto it = std::find_if(next->edges.begin(), next->edges.end(), [&edge](const Edge& x) {
      return x.src == edge.src && x.dst == edge.dst && x.kind == edge.kind;
    });
    if (it != next->edges.end())
      *it = edge;
    else
      next->edges.push_back(edge);
  }
  for (const auto& br : cs.branch_upserts) next->branches[br.branch_ref] = br;
  for (const auto& co : cs.cold_upserts) next->cold[co.id] = co;
  for (const auto& r : cs.audit_appends) {
    auto it = std::find_if(next->audit_log.begin(), next->audit_log.end(),
                           [&r](const AuditRecord& x) { return x.id == r.id; });
    if (it != next->audit_log.end())
      *it = r;
    else
      next->audit_log.push_back(r);
  }

  for (const auto& id : cs.tombstones) {
    const WikiEntry* e = next->find_entry(id);
    if (e == nullptr) throw AtomicityFailure("tombstone of unknown entry " + id);
    if (e->state != WikiState::archived)
      throw AtomicityFailure("tombstone of non-archived entry " + id);
    if (e->cold_id.empty() || next->find_cold(e->cold_id) == nullptr)
      throw AtomicityFailure("tombstone without cold linkout " + id);
    for (auto& edge : next->edges)
      if (edge.src == id || edge.dst == id) edge.dangling_to_tombstone = true;
  }

  if (capacity_) {
    std::size_t active = 0;
    for (const auto& [id, e] : next->entries)
      if (e.state == WikiState::active) ++active;
    if (active > *capacity_)
      throw StorageFull("active entries " + std::to_string(active) + " exceed capacity " +
                        std::to_string(*capacity_));
  }

  if (cs.model_version) next->model_version = *cs.model_version;
  next->commit_seq = base.state->commit_seq + 1;
  next->parent_commit = base.commit_id;
  next->committed_at = now;

  const std::string bytes = nlohmann::json(*next).dump();
  const std::string commit_id = sha256_hex(bytes);

  const auto n = [](std::size_t v) { return static_cast<std::int64_t>(v); };
  log.emit(now, ev::commit,
           {{"commit", commit_id},
            {"parent", base.commit_id},
            {"commit_seq", next->commit_seq},
            {"entries", n(next->entries.size())},
            {"w_buffer", n(cs.buffer_upserts.size())},
            {"w_entries", n(cs.entry_upserts.size())},
            {"w_edges", n(cs.edge_upserts.size())},
            {"w_branches", n(cs.branch_upserts.size())},
            {"w_audit", n(cs.audit_appends.size())},
            {"w_cold", n(cs.cold_upserts.size())},
            {"w_tombstones", n(cs.tombstones.size())}});

  std::int64_t new_hwm = event_hwm_;
  for (const auto& e : log.events())
    if (e.seq > new_hwm) new_hwm = e.seq;

  persist_commit(commit_id, bytes, log, new_hwm);

  {
    std::lock_guard<std::mutex> lock(mu_);
    mem_blobs_[commit_id] = bytes;
    head_ = std::move(next);
    head_commit_ = commit_id;
    event_hwm_ = new_hwm;
  }
  return commit_id;
}

std::int64_t Store::event_hwm() const {
  std::lock_guard<std::mutex> lock(mu_);
  return event_hwm_;
}

void Store::sync_events(const EventLog& log) {
  std::lock_guard<std::mutex> writer(writer_mu_);
  std::int64_t new_hwm = event_hwm_;
  std::string delta;
  for (const auto& e : log.events()) {
    if (e.seq > event_hwm_) {
      delta += e.to_json().dump() + "\n";
      new_hwm = std::max(new_hwm, e.seq);
    }
  }
  if (new_hwm == event_hwm_) return;
  if (!root_.empty()) {
    append_file_durable(fs::path(root_) / "events.jsonl", delta);
    nlohmann::json idx;
    {
      std::lock_guard<std::mutex> lock(mu_);
      idx = {{"head", head_commit_}, {"hwm", new_hwm}};
    }
    write_file_durable(fs::path(root_) / "index.json", idx.dump());
  }
  std::lock_guard<std::mutex> lock(mu_);
  event_hwm_ = new_hwm;
}

void Store::persist_commit(const std::string& commit_id, const std::string& commit_bytes,
                           const EventLog& log, std::int64_t new_hwm) {
  if (root_.empty()) {
    if (failpoint_) {
      failpoint_("commit-blob-written");
      failpoint_("index-renamed");
    }
    return;
  }
  const fs::path p = blob_path(root_, commit_id);
  fs::create_directories(p.parent_path());
  write_file_durable(p, commit_bytes);
  if (failpoint_) failpoint_("commit-blob-written");

  std::string delta;
  for (const auto& e : log.events())
    if (e.seq > event_hwm_ && e.seq <= new_hwm) delta += e.to_json().dump() + "\n";
  append_file_durable(fs::path(root_) / "events.jsonl", delta);

  const nlohmann::json idx = {{"head", commit_id}, {"hwm", new_hwm}};
  write_file_durable(fs::path(root_) / "index.json", idx.dump());
  if (failpoint_) failpoint_("index-renamed");

  // Convenience pointer for humans; index.json is authoritative.
  std::ofstream head_file(fs::path(root_) / "HEAD", std::ios::trunc);
  head_file << commit_id << "\n";
}

}  // namespace memgov
