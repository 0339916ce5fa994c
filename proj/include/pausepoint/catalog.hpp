#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pausepoint/ids.hpp"
#include "pausepoint/model.hpp"
#include "pausepoint/store.hpp"

namespace pausepoint {

// Exercise as stored: the spec plus where it lives and who may see its gallery.
struct ExerciseInfo {
  ExerciseSpec spec;
  std::string lesson_id;
  std::string owner;
  bool published = false;
  bool student_gallery_access = false;
};

// Teacher-facing fields of a new exercise; id and timestamp are assigned.
struct ExerciseDraft {
  std::string instructions;
  int time_limit_s = 0;
  InputMode input_mode = InputMode::InkOnly;
  std::optional<BackgroundImage> background;
};

// Lesson and exercise persistence on top of the store.
class Catalog {
 public:
  Catalog(Store& store, const Clock& clock, bool default_gallery_access);

  Lesson create_lesson(const std::string& owner, const std::string& title);
  // Throws unknown-lesson, forbidden-role (not the owner), lesson-published,
  // unknown-duration for a non-positive duration.
  Lesson add_video(const std::string& lesson_id, const std::string& actor, const BlobRef& video,
                   std::optional<std::int64_t> duration_ms);
  // The draft is shape-validated; violations throw with the first code.
  ExerciseSpec add_exercise(const std::string& lesson_id, const std::string& actor, const ExerciseDraft& draft);
  // Validates every exercise, snapshots remote backgrounds into the blob
  // store and flips the published flag, all in one commit.
  Lesson publish(const std::string& lesson_id, const std::string& actor, const ImageResolver& resolver);

  Lesson lesson(const std::string& lesson_id) const;
  std::optional<Lesson> find_lesson(const std::string& lesson_id) const;
  ExerciseInfo exercise(const std::string& exercise_id) const;
  std::optional<ExerciseInfo> find_exercise(const std::string& exercise_id) const;
  std::vector<std::string> exercise_ids(const std::string& lesson_id) const;

  void set_gallery_access(const std::string& exercise_id, const std::string& actor, bool enabled);

 private:
  Store& store_;
  const Clock& clock_;
  bool default_gallery_access_;
  IdSequence lesson_ids_;
  IdSequence exercise_ids_;
};

// Resolves blob backgrounds against a store and remote locators over
// plain HTTP or file:// URLs.
class StoreImageResolver : public ImageResolver {
 public:
  explicit StoreImageResolver(const Store& store) : store_(store) {}
  bool is_image_blob(const BlobRef& ref) const override;
  std::optional<std::string> fetch(const std::string& url) const override;

 private:
  const Store& store_;
};

}  // namespace pausepoint
