#include <unistd.h>

#include "../common/text_util.hpp"
#include "cxr/errors.hpp"
#include "cxr/survey.hpp"

namespace cxr::survey {

ResponseLog::ResponseLog() = default;

ResponseLog::ResponseLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    if (std::filesystem::exists(*path_)) {
        const std::string content = text::read_file(*path_);
        std::size_t pos = 0, line_no = 0, valid_end = 0;
        while (pos < content.size()) {
            ++line_no;
            const std::size_t nl = content.find('\n', pos);
            const bool complete = nl != std::string::npos;
            const std::string_view line(content.data() + pos, (complete ? nl : content.size()) - pos);
            if (!text::trim(line).empty()) {
                auto j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded() || !complete) {
                    // only a torn tail is recoverable
                    if (complete) throw Error(path_->string() + ": corrupt record on line " + std::to_string(line_no));
                    break;
                }
                auto rec = j.get<ResponseRecord>();
                keys_.emplace(rec.session_id, rec.pair_id);
                records_.push_back(std::move(rec));
            }
            pos = complete ? nl + 1 : content.size();
            valid_end = pos;
        }
        if (valid_end < content.size()) std::filesystem::resize_file(*path_, valid_end);
    }
    file_ = std::fopen(path_->c_str(), "ab");
    if (!file_) throw Error("cannot open response log " + path_->string());
}

ResponseLog::~ResponseLog() {
    if (file_) std::fclose(file_);
}

void ResponseLog::write_line(const std::string& line) {
    if (!file_) return;
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0 ||
        ::fsync(::fileno(file_)) != 0) {
        throw Error("failed to persist response to " + path_->string());
    }
}

void ResponseLog::append(const ResponseRecord& record) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(record.session_id, record.pair_id);
    if (keys_.count(key)) {
        throw ConflictError("response for pair '" + record.pair_id + "' in session " + record.session_id +
                            " already recorded");
    }
    write_line(nlohmann::json(record).dump() + "\n");
    keys_.insert(std::move(key));
    records_.push_back(record);
}

std::vector<ResponseRecord> ResponseLog::snapshot() const {
    std::lock_guard lock(mu_);
    return records_;
}

std::size_t ResponseLog::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

}  // namespace cxr::survey
