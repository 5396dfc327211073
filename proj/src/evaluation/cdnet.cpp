#include "evaluation/cdnet.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "common/error.hpp"

namespace cseg::eval {

namespace fs = std::filesystem;

namespace {

bool has_prefix_ext(const fs::path& p, const char* prefix,
                    std::initializer_list<const char*> exts) {
    const std::string stem = p.stem().string();
    if (stem.rfind(prefix, 0) != 0) return false;
    const std::string ext = p.extension().string();
    return std::any_of(exts.begin(), exts.end(),
                       [&](const char* e) { return ext == e; });
}

std::vector<std::string> sorted_files(const fs::path& dir, const char* prefix,
                                      std::initializer_list<const char*> exts) {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (has_prefix_ext(entry.path(), prefix, exts))
            out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void read_temporal_roi(const fs::path& file, pipe::VideoEntry& video) {
    std::ifstream in(file);
    if (!in) throw_io("cannot open " + file.string());
    int first = 0, last = 0;
    if (!(in >> first >> last) || first < 1 || last < first)
        throw_format(file.string() + ": expected two ascending 1-based frame numbers");
    video.eval_first = first;
    video.eval_last = last;
}

}  // namespace

pipe::DatasetManifest load_cdnet(const std::string& root) {
    const fs::path base(root);
    if (!fs::is_directory(base)) throw_io("dataset root is not a directory: " + root);

    pipe::DatasetManifest manifest;
    manifest.root = fs::absolute(base).string();

    std::vector<fs::path> categories;
    for (const auto& entry : fs::directory_iterator(base))
        if (entry.is_directory()) categories.push_back(entry.path());
    std::sort(categories.begin(), categories.end());

    for (const fs::path& cat : categories) {
        std::vector<fs::path> videos;
        for (const auto& entry : fs::directory_iterator(cat))
            if (entry.is_directory()) videos.push_back(entry.path());
        std::sort(videos.begin(), videos.end());

        for (const fs::path& vid : videos) {
            const fs::path input_dir = vid / "input";
            if (!fs::is_directory(input_dir)) continue;  // not a video directory

            pipe::VideoEntry video;
            video.category = cat.filename().string();
            video.id = video.category + "/" + vid.filename().string();
            video.frames = sorted_files(input_dir, "in", {".jpg", ".jpeg", ".png"});
            if (video.frames.empty())
                throw_format(input_dir.string() + ": no input frames (in*.jpg or in*.png)");

            const fs::path gt_dir = vid / "groundtruth";
            if (fs::is_directory(gt_dir)) {
                video.truths = sorted_files(gt_dir, "gt", {".png"});
                if (!video.truths.empty() && video.truths.size() != video.frames.size())
                    throw_format(vid.string() + ": " + std::to_string(video.frames.size()) +
                                 " input frames but " + std::to_string(video.truths.size()) +
                                 " ground-truth frames");
            }

            const fs::path troi = vid / "temporalROI.txt";
            if (fs::is_regular_file(troi)) read_temporal_roi(troi, video);

            for (const char* name : {"ROI.bmp", "ROI.png"}) {
                const fs::path roi = vid / name;
                if (fs::is_regular_file(roi)) {
                    video.roi_path = roi.string();
                    break;
                }
            }

            manifest.videos.push_back(std::move(video));
        }
    }

    if (manifest.videos.empty())
        throw_format(root + ": no <category>/<video>/input directories found");
    return manifest;
}

}  // namespace cseg::eval
