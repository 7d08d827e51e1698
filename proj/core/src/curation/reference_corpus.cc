#include <string_view>

#include "steel/curation/perplexity.h"

namespace steel::curation {
namespace {

constexpr std::string_view kReference = R"(The river runs past the old mill and under the stone bridge before it reaches the town.
In the morning the market opens early, and farmers bring vegetables, eggs and fresh bread.
Children walk to school along the river path, and the teachers wait for them at the gate.
A language model assigns a probability to every sequence of words or characters.
Training a model means adjusting its parameters so that the observed text becomes more likely.
The data must be cleaned before training: duplicate pages are removed, broken characters are repaired, and very short documents are filtered out.
Good data is often more important than a larger model. Careful filtering removes noise, while deduplication keeps the model from memorizing repeated pages.
Scientists measure the temperature of the ocean at many depths and record the results in a shared database.
The library is open every day except Sunday. Visitors can borrow up to five books at a time and return them within three weeks.
When the weather is clear, you can see the mountains from the top of the hill, and the lake looks like a mirror.
Software engineers write tests to check that each function behaves as expected, and they run the tests after every change.
The committee discussed the budget for the next year and agreed to spend more on education and public transport.
She opened the window, listened to the rain, and wrote a long letter to her brother who lived in another country.
History teaches us that cities grow along rivers and trade routes, where people can exchange goods and ideas.
A simple recipe: mix the flour with water and salt, knead the dough for ten minutes, let it rest, and bake it in a hot oven.
今天天气很好，我们一起去公园散步。公园里有很多人，有的在跑步，有的在下棋，还有的在唱歌。
语言模型的任务是预测下一个词。模型越大，需要的数据就越多，训练的时间也越长。
在训练之前，我们需要对数据进行清洗，去掉重复的网页，修复错误的字符，并过滤掉质量很低的文本。
这个城市有很长的历史，街道两边有许多老房子，每年都有很多游客来这里参观。
学生们在图书馆里安静地看书，老师在讲台上准备明天的课程。
科学家们认为，高质量的数据比更多的参数更重要。只有数据干净，模型才能学到有用的知识。
他每天早上六点起床，先喝一杯热茶，然后开始读书和写作。
我们的团队由几位工程师组成，大家一起设计系统、编写代码、测试功能，并不断改进模型的表现。
春天来了，山上的花开了，河里的水也变得清澈了。农民们开始在田里种植新的庄稼。
这本书介绍了中国古代的科学技术，包括造纸术、印刷术、指南针和火药。
在会议上，大家讨论了明年的计划，决定增加对教育和交通的投入。
如果你想学好一门语言，就要多听、多说、多读、多写，坚持每天练习。
The quick brown fox jumps over the lazy dog. Pack my box with five dozen liquor jugs.
Numbers such as 2024, 3.14 and 100 appear in many documents, along with dates like 12 March and times like 9:30.
)";

}  // namespace

std::string_view ReferenceCorpus() { return kReference; }

}  // namespace steel::curation
